#![allow(dead_code)]

pub mod dense;

use std::f64::consts::PI;
use std::sync::Arc;

use chns_core::stepper::Level;
use chns_core::{Grid2, ModelParams, ScalarField, Spectrum, VectorSpectrum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dense::{DenseLevel, DenseParams};

pub fn to_dense(params: &ModelParams) -> DenseParams {
    DenseParams {
        lambda: params.lambda,
        mobility: params.mobility,
        eps: params.eps,
        gamma: params.gamma,
        nu: params.nu,
        kappa0: params.kappa0,
        chi: params.chi,
        gravity: params.gravity,
    }
}

/// Parameters where every term of the step is of comparable size.
pub fn oracle_params() -> ModelParams {
    ModelParams {
        lambda: 0.5,
        mobility: 0.1,
        eps: 0.3,
        gamma: 1.0,
        nu: 0.2,
        kappa0: 1.0,
        chi: 2.0,
        gravity: [0.3, -1.0],
    }
}

/// Random trigonometric polynomial using every resolved mode of the grid.
pub fn random_field(grid: &Arc<Grid2>, rng: &mut ChaCha8Rng, amp: f64, offset: f64) -> Spectrum {
    let w = (grid.nx() / 2 - 1) as i64;
    let mut terms = Vec::new();
    for ky in -w..=w {
        for kx in 0..=w {
            let a = amp * rng.random_range(-1.0..1.0) / (1.0 + (kx * kx + ky * ky) as f64);
            terms.push((kx as f64, ky as f64, a, rng.random_range(0.0..2.0 * PI)));
        }
    }
    let (lx, ly) = (grid.lx(), grid.ly());
    grid.sample(|x, y| {
        offset
            + terms
                .iter()
                .map(|&(kx, ky, a, th)| a * (2.0 * PI * (kx * x / lx + ky * y / ly) + th).cos())
                .sum::<f64>()
    })
    .spectrum()
    .filter_nyquist()
}

pub fn samples(s: &Spectrum) -> DVector<f64> {
    DVector::from_vec(s.to_field().into_samples())
}

pub fn from_samples(grid: &Arc<Grid2>, v: &DVector<f64>) -> Spectrum {
    ScalarField::new(grid, v.as_slice().to_vec()).unwrap().spectrum()
}

/// Matching random histories for the solver and the dense reference.
pub fn random_history(grid: &Arc<Grid2>, depth: usize, seed: u64) -> (Vec<Level>, Vec<DenseLevel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::new();
    let mut dense = Vec::new();
    for _ in 0..depth {
        let mut f = |amp: f64, off: f64| random_field(grid, &mut rng, amp, off);
        let phi_tilde = f(0.4, 0.1);
        let u_tilde = VectorSpectrum { x: f(0.3, 0.0), y: f(0.3, 0.0) };
        let phi = f(0.4, 0.1);
        let mu = f(0.5, 0.0);
        let u = VectorSpectrum { x: f(0.3, 0.0), y: f(0.3, 0.0) };
        let p = f(0.2, 0.0).without_mean();
        dense.push(DenseLevel {
            phi_tilde: samples(&phi_tilde),
            ux_tilde: samples(&u_tilde.x),
            uy_tilde: samples(&u_tilde.y),
            phi: samples(&phi),
            mu: samples(&mu),
            ux: samples(&u.x),
            uy: samples(&u.y),
            p: samples(&p),
        });
        levels.push(Level { phi_tilde, u_tilde, phi, mu, u, p });
    }
    (levels, dense)
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// Largest discrepancy between one solver step and the dense reference step
/// from the same random history, over all fields and scalars.
pub fn step_discrepancy(order: usize, seed: u64) -> f64 {
    use chns_core::{NoForcing, SolverState};

    let grid = Grid2::square(8, 0.0, 1.0).unwrap();
    let params = oracle_params();
    let dt = 0.05;
    let (levels, dense_levels) = random_history(&grid, order, seed);
    let mut state = SolverState::from_levels(params, order, levels, 0.0).unwrap();
    let r0 = state.r();
    let diag = state.step(dt, &NoForcing).unwrap();
    let ops = dense::Ops::new(dense::DenseGrid::new(8, 0.0, 1.0));
    let reference = ops.step(&dense_levels, r0, dt, &to_dense(&params));

    let got = state.latest();
    let want = &reference.level;
    let pairs = [
        (&got.phi_tilde, &want.phi_tilde),
        (&got.u_tilde.x, &want.ux_tilde),
        (&got.u_tilde.y, &want.uy_tilde),
        (&got.phi, &want.phi),
        (&got.mu, &want.mu),
        (&got.u.x, &want.ux),
        (&got.u.y, &want.uy),
        (&got.p, &want.p),
    ];
    let mut worst = pairs.iter().map(|(g, w)| max_abs_diff(&samples(g), w)).fold(0.0, f64::max);
    for (a, b) in [
        (diag.xi, reference.xi),
        (diag.eta, reference.eta),
        (diag.r_tilde, reference.r_tilde),
        (diag.r, reference.r),
        (diag.energy, reference.energy),
    ] {
        worst = worst.max((a - b).abs());
    }
    worst
}
