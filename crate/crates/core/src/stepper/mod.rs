//! The decoupled consistent-splitting GSAV time step.
//!
//! One step solves, in order:
//!
//! 1. the linear Cahn-Hilliard pair for `phi~`, `mu~` with the convective and
//!    potential terms extrapolated by `B_k` from relaxed histories,
//! 2. a Helmholtz problem per velocity component for `u~`,
//! 3. the scalar auxiliary update giving `R~` and `xi`,
//! 4. the relaxation `(phi, mu, u) = eta * (phi~, mu~, u~)` with
//!    `eta = 1 - (1 - xi)^k` (exponent 2 when `k = 1`),
//! 5. a pressure Poisson problem with the `nu curl curl u~` correction,
//! 6. `R = min(R, E + kappa0)`.
//!
//! `A_k` acts on the tilde histories, `B_k` on the relaxed ones, so both are
//! kept in [`SolverState`].

mod scheme;
mod state;

use thiserror::Error;

use crate::model::{
    buoyancy_force_spectral, dissipation_rate_spectral, energy_parts, integral_f, nonlinear_potential_term,
    ModelError, ModelParams,
};
use crate::spectral::{advect, advect_vector, scaled_gradient, SpectralError, Spectrum, VectorSpectrum};

pub use scheme::{bdf_scheme, BdfScheme};
pub use state::{Level, SolverState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("scheme order must be in 1..=5, got {0}")]
    Order(usize),
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("history needs {expected} levels, got {got}")]
    History { expected: usize, got: usize },
    #[error("E + kappa0 = {value:e} is not positive; increase kappa0")]
    EnergyShift { value: f64 },
    #[error("int F + kappa0 = {value:e} must exceed 1 (kappa0 = {kappa0:e}) at step {step}")]
    KappaTooSmall { value: f64, kappa0: f64, step: usize },
    #[error("non-finite values at step {step} (t = {t}); last good diagnostics: {last:?}")]
    BlowUp { step: usize, t: f64, last: Option<Box<StepDiagnostics>> },
    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: usize, what: String },
}

/// Additive right-hand sides for the phase and momentum equations, evaluated
/// at the new time level.
pub trait Forcing {
    fn phase(&self, _t: f64) -> Option<Spectrum> {
        None
    }
    fn momentum(&self, _t: f64) -> Option<VectorSpectrum> {
        None
    }
}

pub struct NoForcing;

impl Forcing for NoForcing {}

/// Per-step record of the auxiliary-variable bookkeeping and field summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// Scheme order used for this step (lower during the startup ramp).
    pub order: usize,
    pub xi: f64,
    pub eta: f64,
    pub r_tilde: f64,
    pub r: f64,
    /// Original energy `E(phi, u)` of the relaxed fields.
    pub energy: f64,
    /// `|R - (E + kappa0)|`
    pub gap: f64,
    pub dissipation: f64,
    /// `mean(phi)`
    pub mass: f64,
    pub max_div_u: f64,
    /// `||u||^2 + lambda ||grad phi||^2 + lambda gamma ||phi||^2`
    pub bounded_norm: f64,
    /// Branch weight relating `R` to `R~` and `E + kappa0`; zero when the
    /// energy branch of the min is taken.
    pub sigma: f64,
}

/// Result of the auxiliary-variable ODE solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiSolve {
    pub r_tilde: f64,
    pub xi: f64,
    /// `E(phi~, u~)`
    pub tilde_energy: f64,
    /// `M ||grad mu~||^2 + nu ||grad B_k(u)||^2`
    pub dissipation: f64,
}

/// Closed form of the implicit auxiliary update:
/// `R~ = R / (1 + dt * D / (E + kappa0))`, `xi = R~ / (E + kappa0)`.
pub fn xi_from_scalars(r: f64, e_plus_kappa: f64, dt: f64, dissipation: f64) -> Result<(f64, f64), StepError> {
    if !(e_plus_kappa > 0.0) {
        return Err(StepError::EnergyShift { value: e_plus_kappa });
    }
    let r_tilde = r / (1.0 + dt * dissipation / e_plus_kappa);
    Ok((r_tilde, r_tilde / e_plus_kappa))
}

/// `eta = 1 - (1 - xi)^2` for `k = 1`, `1 - (1 - xi)^k` otherwise.
pub fn relaxation_factor(xi: f64, k: usize) -> f64 {
    assert!((1..=5).contains(&k), "order out of range");
    let exponent = if k == 1 { 2 } else { k as i32 };
    1.0 - (1.0 - xi).powi(exponent)
}

/// `R^{n+1} = min(R^n, E^{n+1} + kappa0)`.
pub fn sav_update(r: f64, e_plus_kappa: f64) -> f64 {
    r.min(e_plus_kappa)
}

/// Extrapolated relaxed fields `B_k(.)` of the current history.
pub(crate) struct Extrapolated {
    pub phi: Spectrum,
    pub mu: Spectrum,
    pub u: VectorSpectrum,
    pub p: Spectrum,
}

/// Solve the linear Cahn-Hilliard pair for `(phi~, mu~)`:
///
/// `(alpha/dt + M lambda lap^2 - M lambda gamma lap) phi~
///     = A(phi~)/dt - B(u).grad B(phi) + M lap(lambda F'(B(phi))) + f_phi`
pub fn solve_phase(state: &SolverState, dt: f64, forcing: Option<&Spectrum>) -> (Spectrum, Spectrum) {
    let scheme = state.active_scheme();
    let ext = state.extrapolate(&scheme);
    solve_phase_with(state, &scheme, &ext, dt, forcing)
}

fn solve_phase_with(
    state: &SolverState,
    scheme: &BdfScheme,
    ext: &Extrapolated,
    dt: f64,
    forcing: Option<&Spectrum>,
) -> (Spectrum, Spectrum) {
    let p = state.params();
    let nonlinear = nonlinear_potential_term(&ext.phi, p);
    let mut rhs = scheme.apply_a(state.levels().map(|l| &l.phi_tilde)).scale(1.0 / dt);
    rhs -= &advect(&ext.u, &ext.phi);
    rhs.axpy(p.mobility, &nonlinear.laplacian());
    if let Some(f) = forcing {
        rhs += f;
    }
    let ml = p.mobility * p.lambda;
    let phi = rhs.solve_ch_operator(scheme.alpha() / dt, ml, ml * p.gamma);
    let mut mu = nonlinear;
    mu.axpy(-p.lambda, &phi.laplacian());
    mu.axpy(p.lambda * p.gamma, &phi);
    (phi, mu)
}

/// Solve `(alpha/dt - nu lap) u~ = A(u~)/dt + B(mu) grad B(phi)
///     - (B(u).grad) B(u) - grad B(p) + buoyancy + f_u` componentwise.
pub fn solve_momentum(state: &SolverState, dt: f64, forcing: Option<&VectorSpectrum>) -> VectorSpectrum {
    let scheme = state.active_scheme();
    let ext = state.extrapolate(&scheme);
    solve_momentum_with(state, &scheme, &ext, dt, forcing)
}

fn solve_momentum_with(
    state: &SolverState,
    scheme: &BdfScheme,
    ext: &Extrapolated,
    dt: f64,
    forcing: Option<&VectorSpectrum>,
) -> VectorSpectrum {
    let p = state.params();
    let mut rhs = scheme.apply_a(state.levels().map(|l| &l.u_tilde)).scale(1.0 / dt);
    rhs.axpy(1.0, &scaled_gradient(&ext.mu, &ext.phi));
    rhs.axpy(-1.0, &advect_vector(&ext.u, &ext.u));
    rhs.axpy(-1.0, &ext.p.gradient());
    if p.buoyancy_enabled() {
        rhs.axpy(1.0, &buoyancy_force_spectral(&ext.phi, p));
    }
    if let Some(f) = forcing {
        rhs.axpy(1.0, f);
    }
    rhs.map(|c| c.solve_helmholtz(scheme.alpha() / dt, p.nu))
}

/// Auxiliary-variable update from the tilde fields of the current step.
pub fn compute_xi(
    state: &SolverState,
    mu_tilde: &Spectrum,
    phi_tilde: &Spectrum,
    u_tilde: &VectorSpectrum,
    dt: f64,
) -> Result<XiSolve, StepError> {
    let scheme = state.active_scheme();
    let u_ext = scheme.apply_b(state.levels().map(|l| &l.u));
    compute_xi_with(state, mu_tilde, phi_tilde, u_tilde, &u_ext, dt)
}

fn compute_xi_with(
    state: &SolverState,
    mu_tilde: &Spectrum,
    phi_tilde: &Spectrum,
    u_tilde: &VectorSpectrum,
    u_ext: &VectorSpectrum,
    dt: f64,
) -> Result<XiSolve, StepError> {
    let p = state.params();
    let tilde_energy = energy_parts(phi_tilde, u_tilde, p).total();
    let dissipation = dissipation_rate_spectral(mu_tilde, u_ext, p);
    let (r_tilde, xi) = xi_from_scalars(state.r(), tilde_energy + p.kappa0, dt, dissipation)?;
    Ok(XiSolve { r_tilde, xi, tilde_energy, dissipation })
}

/// Consistent-splitting pressure:
/// `lap p = div(mu grad phi - (u.grad) u - nu curl curl u~ + buoyancy + f_u)`,
/// gauge fixed to zero mean.
pub fn pressure_update(
    params: &ModelParams,
    phi: &Spectrum,
    mu: &Spectrum,
    u: &VectorSpectrum,
    u_tilde: &VectorSpectrum,
    forcing: Option<&VectorSpectrum>,
) -> Result<Spectrum, StepError> {
    let mut rhs = scaled_gradient(mu, phi);
    rhs.axpy(-1.0, &advect_vector(u, u));
    rhs.axpy(-params.nu, &u_tilde.curl_curl());
    if params.buoyancy_enabled() {
        rhs.axpy(1.0, &buoyancy_force_spectral(phi, params));
    }
    if let Some(f) = forcing {
        rhs.axpy(1.0, f);
    }
    Ok(rhs.divergence().solve_poisson_zero_mean()?)
}

fn bounded_norm(phi: &Spectrum, u: &VectorSpectrum, params: &ModelParams) -> f64 {
    let un = u.l2_norm();
    let g = phi.h1_seminorm();
    let l2 = phi.l2_norm();
    un * un + params.lambda * g * g + params.lambda * params.gamma * l2 * l2
}

fn max_divergence(u: &VectorSpectrum) -> f64 {
    u.divergence().to_field().max_abs()
}

impl SolverState {
    /// Advance one step of size `dt`. On error the state is left unchanged.
    pub fn step(&mut self, dt: f64, forcing: &dyn Forcing) -> Result<StepDiagnostics, StepError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StepError::TimeStep(dt));
        }
        let params = *self.params();
        let step = self.step_index() + 1;
        let t_new = self.t() + dt;
        let f_phi = forcing.phase(t_new);
        let f_u = forcing.momentum(t_new);

        let scheme = self.active_scheme();
        let ext = self.extrapolate(&scheme);
        let (phi_t, mu_t) = solve_phase_with(self, &scheme, &ext, dt, f_phi.as_ref());
        let u_t = solve_momentum_with(self, &scheme, &ext, dt, f_u.as_ref());
        let blow_up = || StepError::BlowUp { step, t: t_new, last: self.last_diagnostics().cloned().map(Box::new) };
        if !(phi_t.is_finite() && mu_t.is_finite() && u_t.is_finite()) {
            return Err(blow_up());
        }
        let xs = compute_xi_with(self, &mu_t, &phi_t, &u_t, &ext.u, dt)?;
        let eta = relaxation_factor(xs.xi, scheme.order());

        let phi = phi_t.scale(eta);
        let mu = mu_t.scale(eta);
        let u = u_t.scale(eta);
        let p = pressure_update(&params, &phi, &mu, &u, &u_t, f_u.as_ref())?;

        let energy = energy_parts(&phi, &u, &params).total();
        let r_prev = self.r();
        let r = sav_update(r_prev, energy + params.kappa0);

        let finite = [xs.xi, xs.r_tilde, eta, energy, r].iter().all(|v| v.is_finite()) && p.is_finite();
        if !finite {
            return Err(blow_up());
        }

        let shifted_f = integral_f(&phi, &params) + params.kappa0;
        if shifted_f <= 1.0 {
            return Err(StepError::KappaTooSmall { value: shifted_f, kappa0: params.kappa0, step });
        }

        let e_shift = energy + params.kappa0;
        let sigma = if r_prev >= e_shift {
            0.0
        } else {
            1.0 - xs.r_tilde * xs.dissipation * dt / ((xs.tilde_energy + params.kappa0) * (e_shift - xs.r_tilde))
        };
        self.check_invariants(step, &xs, r, energy, sigma)?;

        let diag = StepDiagnostics {
            step,
            t: t_new,
            order: scheme.order(),
            xi: xs.xi,
            eta,
            r_tilde: xs.r_tilde,
            r,
            energy,
            gap: (r - e_shift).abs(),
            dissipation: xs.dissipation,
            mass: phi.mean(),
            max_div_u: max_divergence(&u),
            bounded_norm: bounded_norm(&phi, &u, &params),
            sigma,
        };
        self.commit(Level { phi_tilde: phi_t, u_tilde: u_t, phi, mu, u, p }, r, energy, t_new, diag.clone());
        Ok(diag)
    }

    fn check_invariants(&self, step: usize, xs: &XiSolve, r: f64, energy: f64, sigma: f64) -> Result<(), StepError> {
        let r_prev = self.r();
        let kappa0 = self.params().kappa0;
        let fail = |what: String| Err(StepError::Invariant { step, what });
        if !(xs.xi > 0.0) {
            return fail(format!("xi = {} is not positive", xs.xi));
        }
        if !(xs.r_tilde > 0.0 && xs.r_tilde <= r_prev) {
            return fail(format!("R~ = {} outside (0, {}]", xs.r_tilde, r_prev));
        }
        if !(r > 0.0 && r <= r_prev) {
            return fail(format!("R increased from {r_prev} to {r}"));
        }
        // E^{n+1} + kappa0 <= R^n <= E^n + kappa0, up to rounding of the shift.
        if energy + kappa0 <= r_prev {
            let slack = 4.0 * f64::EPSILON * (self.energy().abs() + kappa0);
            if energy > self.energy() + slack {
                return fail(format!("original energy rose from {} to {energy}", self.energy()));
            }
        }
        if self.debug_checks() {
            let e_shift = energy + kappa0;
            let reconstructed = sigma * xs.r_tilde + (1.0 - sigma) * e_shift;
            if (reconstructed - r).abs() > 1e-10 * r {
                return fail(format!("sigma representation gives {reconstructed}, expected {r}"));
            }
            if !(0.0..1.0).contains(&sigma) {
                return fail(format!("sigma = {sigma} outside [0, 1)"));
            }
        }
        Ok(())
    }

    /// Step until the history is as deep as the scheme order, ramping the
    /// order 1, 2, ... on the way.
    pub fn warm_up(&mut self, dt: f64, forcing: &dyn Forcing) -> Result<Vec<StepDiagnostics>, StepError> {
        let mut out = Vec::new();
        while !self.is_warm() {
            out.push(self.step(dt, forcing)?);
        }
        Ok(out)
    }
}

pub fn warm_up(state: &mut SolverState, dt: f64, forcing: &dyn Forcing) -> Result<Vec<StepDiagnostics>, StepError> {
    state.warm_up(dt, forcing)
}

#[cfg(test)]
mod tests;
