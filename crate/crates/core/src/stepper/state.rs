use std::collections::VecDeque;
use std::sync::Arc;

use crate::model::{chemical_potential, energy_parts, integral_f, ModelParams};
use crate::spectral::{Grid2, ScalarField, Spectrum, VectorField2, VectorSpectrum};

use super::{pressure_update, BdfScheme, Extrapolated, StepDiagnostics, StepError};

/// One time level of the solver history.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub phi_tilde: Spectrum,
    pub u_tilde: VectorSpectrum,
    pub phi: Spectrum,
    pub mu: Spectrum,
    pub u: VectorSpectrum,
    pub p: Spectrum,
}

impl Level {
    /// A level whose tilde fields coincide with the relaxed ones.
    pub fn exact(phi: Spectrum, mu: Spectrum, u: VectorSpectrum, p: Spectrum) -> Self {
        Level { phi_tilde: phi.clone(), u_tilde: u.clone(), phi, mu, u, p }
    }
}

/// Everything one simulation carries between steps.
#[derive(Debug, Clone)]
pub struct SolverState {
    params: ModelParams,
    scheme: BdfScheme,
    grid: Arc<Grid2>,
    /// Newest level first, at most `scheme.order()` deep.
    history: VecDeque<Level>,
    r: f64,
    energy: f64,
    t: f64,
    step: usize,
    debug_checks: bool,
    last: Option<StepDiagnostics>,
}

impl SolverState {
    /// Cold start from initial data at `t = 0`. The chemical potential comes
    /// from the phase field and the pressure from the Poisson problem with
    /// `u~ = u`. Nyquist content of the inputs is discarded.
    pub fn new(params: ModelParams, order: usize, phi0: &ScalarField, u0: &VectorField2) -> Result<Self, StepError> {
        params.validate()?;
        let scheme = BdfScheme::new(order)?;
        let phi = phi0.spectrum().filter_nyquist();
        let u = u0.spectrum().map(Spectrum::filter_nyquist);
        let mu = chemical_potential(&phi, &params);
        let p = pressure_update(&params, &phi, &mu, &u, &u, None)?;
        let grid = Arc::clone(phi.grid());
        Self::assemble(params, scheme, grid, vec![Level::exact(phi, mu, u, p)], 0.0)
    }

    /// Start from a full history (newest first) whose newest level is at `t`.
    pub fn from_levels(params: ModelParams, order: usize, levels: Vec<Level>, t: f64) -> Result<Self, StepError> {
        params.validate()?;
        let scheme = BdfScheme::new(order)?;
        if levels.len() != order {
            return Err(StepError::History { expected: order, got: levels.len() });
        }
        let grid = Arc::clone(levels[0].phi.grid());
        Self::assemble(params, scheme, grid, levels, t)
    }

    /// Seed the history from an exact sampler at `t0, t0 + dt, ...,
    /// t0 + (k-1) dt`, returning a warm state at the last of these.
    pub fn seeded(
        params: ModelParams,
        order: usize,
        dt: f64,
        t0: f64,
        sampler: impl Fn(f64) -> Level,
    ) -> Result<Self, StepError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StepError::TimeStep(dt));
        }
        let levels: Vec<Level> = (0..order).rev().map(|j| sampler(t0 + j as f64 * dt)).collect();
        let t = t0 + (order.max(1) - 1) as f64 * dt;
        Self::from_levels(params, order, levels, t)
    }

    fn assemble(
        params: ModelParams,
        scheme: BdfScheme,
        grid: Arc<Grid2>,
        levels: Vec<Level>,
        t: f64,
    ) -> Result<Self, StepError> {
        let newest = &levels[0];
        let energy = energy_parts(&newest.phi, &newest.u, &params).total();
        let shifted = energy + params.kappa0;
        if !(shifted > 0.0) {
            return Err(StepError::EnergyShift { value: shifted });
        }
        let shifted_f = integral_f(&newest.phi, &params) + params.kappa0;
        if shifted_f <= 1.0 {
            return Err(StepError::KappaTooSmall { value: shifted_f, kappa0: params.kappa0, step: 0 });
        }
        Ok(SolverState {
            params,
            scheme,
            grid,
            history: levels.into(),
            r: shifted,
            energy,
            t,
            step: 0,
            debug_checks: false,
            last: None,
        })
    }

    /// Enable the sigma-representation consistency check on every step.
    pub fn with_debug_checks(mut self, on: bool) -> Self {
        self.debug_checks = on;
        self
    }

    pub fn debug_checks(&self) -> bool {
        self.debug_checks
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scheme(&self) -> &BdfScheme {
        &self.scheme
    }

    pub fn order(&self) -> usize {
        self.scheme.order()
    }

    pub fn grid(&self) -> &Arc<Grid2> {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Original energy of the newest relaxed level.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn history_depth(&self) -> usize {
        self.history.len()
    }

    pub fn is_warm(&self) -> bool {
        self.history.len() >= self.scheme.order()
    }

    pub fn levels(&self) -> impl Iterator<Item = &Level> {
        self.history.iter()
    }

    pub fn latest(&self) -> &Level {
        &self.history[0]
    }

    pub fn phi(&self) -> ScalarField {
        self.latest().phi.to_field()
    }

    pub fn mu(&self) -> ScalarField {
        self.latest().mu.to_field()
    }

    pub fn u(&self) -> VectorField2 {
        self.latest().u.to_field()
    }

    pub fn p(&self) -> ScalarField {
        self.latest().p.to_field()
    }

    pub fn last_diagnostics(&self) -> Option<&StepDiagnostics> {
        self.last.as_ref()
    }

    /// Diagnostics of the current level as if it had just been produced.
    pub fn current_diagnostics(&self) -> StepDiagnostics {
        if let Some(d) = &self.last {
            return d.clone();
        }
        let l = self.latest();
        let p = &self.params;
        let gphi = l.phi.h1_seminorm();
        let lphi = l.phi.l2_norm();
        let un = l.u.l2_norm();
        StepDiagnostics {
            step: self.step,
            t: self.t,
            order: self.history.len().min(self.scheme.order()),
            xi: 1.0,
            eta: 1.0,
            r_tilde: self.r,
            r: self.r,
            energy: self.energy,
            gap: (self.r - (self.energy + p.kappa0)).abs(),
            dissipation: crate::model::dissipation_rate_spectral(&l.mu, &l.u, p),
            mass: l.phi.mean(),
            max_div_u: l.u.divergence().to_field().max_abs(),
            bounded_norm: un * un + p.lambda * gphi * gphi + p.lambda * p.gamma * lphi * lphi,
            sigma: 0.0,
        }
    }

    /// Scheme for the next step: the target order once warm, otherwise the
    /// history depth.
    pub fn active_scheme(&self) -> BdfScheme {
        let k = self.history.len().min(self.scheme.order());
        BdfScheme::new(k).expect("history depth is within 1..=5")
    }

    pub(crate) fn extrapolate(&self, scheme: &BdfScheme) -> Extrapolated {
        Extrapolated {
            phi: scheme.apply_b(self.history.iter().map(|l| &l.phi)),
            mu: scheme.apply_b(self.history.iter().map(|l| &l.mu)),
            u: scheme.apply_b(self.history.iter().map(|l| &l.u)),
            p: scheme.apply_b(self.history.iter().map(|l| &l.p)),
        }
    }

    pub(crate) fn commit(&mut self, level: Level, r: f64, energy: f64, t: f64, diag: StepDiagnostics) {
        self.history.push_front(level);
        self.history.truncate(self.scheme.order());
        self.r = r;
        self.energy = energy;
        self.t = t;
        self.step += 1;
        self.last = Some(diag);
    }
}
