use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::spectral::{Grid2, ScalarField, VectorField2};

fn grid(n: usize) -> Arc<Grid2> {
    Grid2::square(n, 0.0, 1.0).unwrap()
}

fn unit_params() -> ModelParams {
    ModelParams { lambda: 1.0, mobility: 1.0, eps: 1.0, gamma: 0.0, nu: 1.0, kappa0: 1.0, chi: 0.0, gravity: [0.0, -1.0] }
}

fn wavy_state(order: usize) -> SolverState {
    let g = grid(16);
    let tau = std::f64::consts::TAU;
    let phi = g.sample(|x, y| 0.4 * (tau * x).cos() * (tau * y).sin() + 0.1);
    let u = VectorField2::new(g.sample(|_, y| 0.3 * (tau * y).sin()), g.sample(|x, _| 0.2 * (tau * x).cos()));
    let params = ModelParams { mobility: 1e-2, eps: 0.2, lambda: 0.1, nu: 0.1, ..unit_params() };
    SolverState::new(params, order, &phi, &u).unwrap()
}

#[test]
fn scalar_auxiliary_update() {
    let (rt, xi) = xi_from_scalars(5.0, 4.0, 1.0, 1.0).unwrap();
    assert!((rt - 4.0).abs() < 1e-15 && (xi - 1.0).abs() < 1e-15);
    let (rt, xi) = xi_from_scalars(2.0, 2.0, 0.1, 0.0).unwrap();
    assert_eq!((rt, xi), (2.0, 1.0));
    assert!(matches!(xi_from_scalars(1.0, 0.0, 0.1, 1.0), Err(StepError::EnergyShift { .. })));
}

#[test]
fn relaxation_factors() {
    assert_eq!(relaxation_factor(1.0, 1), 1.0);
    assert_eq!(relaxation_factor(1.0, 4), 1.0);
    assert!((relaxation_factor(0.9, 1) - 0.99).abs() < 1e-15);
    assert!((relaxation_factor(0.9, 2) - 0.99).abs() < 1e-15);
    assert!((relaxation_factor(0.9, 3) - 0.999).abs() < 1e-15);
    assert!((relaxation_factor(1.1, 3) - (1.0 + 1e-3)).abs() < 1e-14);
}

#[test]
fn sav_update_takes_the_smaller_value() {
    assert_eq!(sav_update(3.0, 2.5), 2.5);
    assert_eq!(sav_update(3.0, 3.5), 3.0);
}

#[test]
fn zero_state_is_a_fixed_point() {
    // phi = 0 is an equilibrium of the potential; E = int F = 1/4 here.
    let g = grid(8);
    let params = unit_params();
    let mut s = SolverState::new(params, 2, &ScalarField::zeros(&g), &VectorField2::zeros(&g)).unwrap();
    assert!((s.energy() - 0.25).abs() < 1e-15);
    for _ in 0..4 {
        let d = s.step(1e-2, &NoForcing).unwrap();
        assert!((d.xi - 1.0).abs() < 1e-14 && (d.eta - 1.0).abs() < 1e-14);
        assert!((d.r - 1.25).abs() < 1e-14);
    }
    assert!(s.phi().max_abs() < 1e-15);
    assert!(s.u().x.max_abs() < 1e-14 && s.p().max_abs() < 1e-14);
}

#[test]
fn phase_solve_without_dynamics_returns_history() {
    // From rest at phi = 0, phi~ solves alpha/dt phi~ = A(phi~)/dt
    let g = grid(8);
    let s = SolverState::new(unit_params(), 1, &ScalarField::zeros(&g), &VectorField2::zeros(&g)).unwrap();
    let (phi, mu) = solve_phase(&s, 0.1, None);
    assert!(phi.rms() < 1e-15);
    assert!(mu.rms() < 1e-14);
    let u = solve_momentum(&s, 0.1, None);
    assert!(u.l2_norm() < 1e-14);
}

#[test]
fn momentum_solve_inverts_helmholtz() {
    // phi = 0, u = 0, constant forcing f gives u~ = dt f for k = 1
    let g = grid(8);
    let s = SolverState::new(unit_params(), 1, &ScalarField::zeros(&g), &VectorField2::zeros(&g)).unwrap();
    let f = VectorField2::new(ScalarField::constant(&g, 2.0), ScalarField::constant(&g, -1.0)).spectrum();
    let u = solve_momentum(&s, 0.25, Some(&f));
    assert!((u.x.mean() - 0.5).abs() < 1e-14 && (u.y.mean() + 0.25).abs() < 1e-14);
}

#[test]
fn pressure_of_a_gradient_forcing() {
    // At rest with a uniform phase, lap p = div grad h, so p = h - mean(h).
    let g = grid(16);
    let tau = std::f64::consts::TAU;
    let h = g.sample(|x, y| (tau * x).sin() * (2.0 * tau * y).cos() + 3.0);
    let phi = ScalarField::constant(&g, 1.0).spectrum();
    let zero = VectorSpectrum::zeros(&g);
    let mu = Spectrum::zeros(&g);
    let p = pressure_update(&unit_params(), &phi, &mu, &zero, &zero, Some(&h.spectrum().gradient())).unwrap();
    let expect = h.spectrum().without_mean();
    assert!(p.max_diff(&expect) < 1e-13);
}

#[test]
fn warm_up_ramps_the_order() {
    let mut s = wavy_state(3);
    assert_eq!(s.history_depth(), 1);
    let ramp = s.warm_up(1e-3, &NoForcing).unwrap();
    assert_eq!(ramp.iter().map(|d| d.order).collect::<Vec<_>>(), vec![1, 2]);
    assert!(s.is_warm());
    let d = s.step(1e-3, &NoForcing).unwrap();
    assert_eq!(d.order, 3);
    assert_eq!(s.history_depth(), 3);
    assert_eq!(d.step, 3);
    assert!((s.t() - 3e-3).abs() < 1e-15);
}

#[test]
fn step_respects_invariants_with_debug_checks() {
    for k in 1..=5 {
        let mut s = wavy_state(k).with_debug_checks(true);
        let mut r = s.r();
        for _ in 0..20 {
            let d = s.step(5e-3, &NoForcing).unwrap();
            assert!(d.xi > 0.0);
            assert!(d.r <= r, "k={k}: R rose from {r} to {}", d.r);
            assert!(d.r_tilde > 0.0 && d.r_tilde <= r);
            r = d.r;
        }
    }
}

fn check_sigma_branches(s: &mut SolverState, dt: f64, forcing: &dyn Forcing) -> (bool, bool) {
    let (mut energy_branch, mut r_branch) = (false, false);
    for _ in 0..20 {
        let before = s.r();
        let d = s.step(dt, forcing).unwrap();
        let shifted = d.energy + s.params().kappa0;
        if d.sigma == 0.0 {
            assert_eq!(d.r, shifted);
            energy_branch = true;
        } else {
            assert_eq!(d.r, before);
            assert!((0.0..1.0).contains(&d.sigma));
            let rebuilt = d.sigma * d.r_tilde + (1.0 - d.sigma) * shifted;
            assert!((rebuilt - d.r).abs() < 1e-12 * d.r);
            r_branch = true;
        }
    }
    (energy_branch, r_branch)
}

#[test]
fn sigma_branches() {
    // Free decay keeps E + kappa0 below R: the energy branch of the min.
    let mut s = wavy_state(1).with_debug_checks(true);
    assert!(check_sigma_branches(&mut s, 0.05, &NoForcing).0);

    // A steady push feeds kinetic energy in faster than R can follow.
    struct Push;
    impl Forcing for Push {
        fn momentum(&self, _t: f64) -> Option<VectorSpectrum> {
            let g = Grid2::square(16, 0.0, 1.0).unwrap();
            let tau = std::f64::consts::TAU;
            Some(VectorField2::new(g.sample(|_, y| 5.0 * (tau * y).cos()), ScalarField::zeros(&g)).spectrum())
        }
    }
    let mut s = wavy_state(2).with_debug_checks(true);
    let (_, r_branch) = check_sigma_branches(&mut s, 0.01, &Push);
    assert!(r_branch, "R branch never taken");
}

#[test]
fn failed_step_leaves_state_unchanged() {
    let mut s = wavy_state(2);
    s.step(1e-3, &NoForcing).unwrap();
    let before = s.clone();
    assert!(matches!(s.step(-1.0, &NoForcing), Err(StepError::TimeStep(_))));
    assert!(matches!(s.step(f64::NAN, &NoForcing), Err(StepError::TimeStep(_))));
    assert_eq!(s.latest(), before.latest());
    assert_eq!(s.step_index(), before.step_index());
}

#[test]
fn blow_up_is_reported() {
    struct Huge;
    impl Forcing for Huge {
        fn momentum(&self, _t: f64) -> Option<VectorSpectrum> {
            None
        }
        fn phase(&self, _t: f64) -> Option<Spectrum> {
            let g = Grid2::square(16, 0.0, 1.0).unwrap();
            Some(g.sample(|x, _| if x < 0.5 { f64::INFINITY } else { 0.0 }).spectrum())
        }
    }
    let mut s = wavy_state(1);
    s.step(1e-3, &NoForcing).unwrap();
    match s.step(1e-3, &Huge) {
        Err(StepError::BlowUp { step, last, .. }) => {
            assert_eq!(step, 2);
            assert_eq!(last.unwrap().step, 1);
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
    assert_eq!(s.step_index(), 1);
}

#[test]
fn small_kappa_is_rejected() {
    // int F = 1/4 for phi = 0, eps = 1, gamma = 0 on the unit square
    let g = grid(8);
    let params = ModelParams { kappa0: 0.5, ..unit_params() };
    let r = SolverState::new(params, 1, &ScalarField::zeros(&g), &VectorField2::zeros(&g));
    assert!(matches!(r, Err(StepError::KappaTooSmall { .. })));
    let params = ModelParams { kappa0: 0.8, ..unit_params() };
    assert!(SolverState::new(params, 1, &ScalarField::zeros(&g), &VectorField2::zeros(&g)).is_ok());
}

#[test]
fn history_depth_must_match_order() {
    let s = wavy_state(1);
    let levels = vec![s.latest().clone()];
    assert!(matches!(
        SolverState::from_levels(*s.params(), 2, levels, 0.0),
        Err(StepError::History { expected: 2, got: 1 })
    ));
}

#[test]
fn local_error_shrinks_with_the_step() {
    // One BDF1 step from smooth data: the defect against a fine reference
    // scales like dt^2, so halving dt divides it by about 4.
    let reference = {
        let mut s = wavy_state(1);
        for _ in 0..64 {
            s.step(0.02 / 64.0, &NoForcing).unwrap();
        }
        s.latest().phi.clone()
    };
    let err = |dt: f64, n: usize| {
        let mut s = wavy_state(1);
        for _ in 0..n {
            s.step(dt, &NoForcing).unwrap();
        }
        s.latest().phi.max_diff(&reference)
    };
    // same final time, so the global error ratio is about 2 for k = 1
    let ratio = err(0.02, 1) / err(0.01, 2);
    assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn r_never_increases(k in 1usize..=5, amp in 0.05f64..0.9, dt_exp in -4.0f64..-1.0, seed in 0u64..1000) {
        let g = grid(8);
        let tau = std::f64::consts::TAU;
        let shift = seed as f64 * 0.013;
        let phi = g.sample(|x, y| amp * (tau * (x + shift)).sin() * (tau * y).cos());
        let u = VectorField2::new(g.sample(|_, y| amp * (tau * y).sin()), ScalarField::zeros(&g));
        let params = ModelParams { eps: 0.3, mobility: 0.1, lambda: 0.5, nu: 0.2, ..unit_params() };
        let mut s = SolverState::new(params, k, &phi, &u).unwrap();
        let dt = 10f64.powf(dt_exp);
        let mut r = s.r();
        for _ in 0..8 {
            let d = s.step(dt, &NoForcing).unwrap();
            prop_assert!(d.xi > 0.0);
            prop_assert!(d.r <= r);
            prop_assert!(d.r > 0.0);
            r = d.r;
        }
    }
}
