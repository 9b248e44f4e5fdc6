//! Manufactured-solution forcing, error norms and temporal convergence
//! studies.
//!
//! Forcings are built from the solver's own spectral operators and dealiased
//! products applied to exact samples, so on resolved modes the only error a
//! run can accumulate is the temporal one.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{chemical_potential, ModelParams};
use crate::spectral::{advect, advect_vector, scaled_gradient, Grid2, ScalarField, Spectrum, VectorField2, VectorSpectrum};
use crate::stepper::{Forcing, Level, SolverState, StepError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerificationError {
    #[error("time step ladder must hold at least 2 strictly decreasing positive entries")]
    Ladder,
    #[error("t_end = {t_end} is not a whole number of steps of size {dt}")]
    Incommensurate { t_end: f64, dt: f64 },
    #[error("t_end = {t_end} leaves no steps after seeding {order} levels at dt = {dt}")]
    TooShort { t_end: f64, dt: f64, order: usize },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

type ScalarFn = Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Closed-form fields `(phi, u, p)(x, y, t)` with their time derivatives.
pub struct ManufacturedSolution {
    pub phi: ScalarFn,
    pub phi_t: ScalarFn,
    pub u: VectorFn,
    pub u_t: VectorFn,
    pub p: ScalarFn,
}

impl ManufacturedSolution {
    /// `phi = cos t cos(pi x) cos(pi y)`,
    /// `u = pi sin t (sin^2(pi x) sin(2 pi y), -sin(2 pi x) sin^2(pi y))`,
    /// `p = sin t cos(pi x) sin(pi y)` on `[-1, 1]^2`.
    pub fn trigonometric() -> Self {
        let shape_u = |x: f64, y: f64| {
            let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
            [PI * sx * sx * (2.0 * PI * y).sin(), -PI * (2.0 * PI * x).sin() * sy * sy]
        };
        ManufacturedSolution {
            phi: Box::new(|x, y, t| t.cos() * (PI * x).cos() * (PI * y).cos()),
            phi_t: Box::new(|x, y, t| -t.sin() * (PI * x).cos() * (PI * y).cos()),
            u: Box::new(move |x, y, t| shape_u(x, y).map(|v| v * t.sin())),
            u_t: Box::new(move |x, y, t| shape_u(x, y).map(|v| v * t.cos())),
            p: Box::new(|x, y, t| t.sin() * (PI * x).cos() * (PI * y).sin()),
        }
    }

    /// `phi = 1`, `u = 0`, `p = 0`.
    pub fn steady_pure_phase() -> Self {
        ManufacturedSolution {
            phi: Box::new(|_, _, _| 1.0),
            phi_t: Box::new(|_, _, _| 0.0),
            u: Box::new(|_, _, _| [0.0, 0.0]),
            u_t: Box::new(|_, _, _| [0.0, 0.0]),
            p: Box::new(|_, _, _| 0.0),
        }
    }
}

/// Collocation samples of an exact solution at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSample {
    pub phi: ScalarField,
    pub u: VectorField2,
    pub p: ScalarField,
}

fn sample_vector(grid: &Arc<Grid2>, f: impl Fn(f64, f64) -> [f64; 2]) -> VectorField2 {
    VectorField2::new(grid.sample(|x, y| f(x, y)[0]), grid.sample(|x, y| f(x, y)[1]))
}

pub fn sample(ms: &ManufacturedSolution, t: f64, grid: &Arc<Grid2>) -> ExactSample {
    ExactSample {
        phi: grid.sample(|x, y| (ms.phi)(x, y, t)),
        u: sample_vector(grid, |x, y| (ms.u)(x, y, t)),
        p: grid.sample(|x, y| (ms.p)(x, y, t)),
    }
}

/// Exact solver level at `t`: tilde and relaxed fields equal the samples and
/// `mu` is the chemical potential of the sampled phase field.
pub fn exact_level(ms: &ManufacturedSolution, t: f64, params: &ModelParams, grid: &Arc<Grid2>) -> Level {
    let s = sample(ms, t, grid);
    let phi = s.phi.spectrum().filter_nyquist();
    let mu = chemical_potential(&phi, params);
    let u = s.u.spectrum().map(Spectrum::filter_nyquist);
    let p = s.p.spectrum().filter_nyquist();
    Level::exact(phi, mu, u, p)
}

/// Forcings that make the exact solution satisfy the continuous system on
/// resolved modes:
///
/// `f_phi = phi_t + u.grad phi - M lap mu`,
/// `f_u = u_t + (u.grad) u - nu lap u + grad p - mu grad phi`.
pub struct ManufacturedForcing<'a> {
    pub solution: &'a ManufacturedSolution,
    pub params: ModelParams,
    pub grid: Arc<Grid2>,
}

impl ManufacturedForcing<'_> {
    pub fn fields(&self, t: f64) -> (Spectrum, VectorSpectrum) {
        let ms = self.solution;
        let g = &self.grid;
        let p = &self.params;
        let s = sample(ms, t, g);
        let phi = s.phi.spectrum().filter_nyquist();
        let u = s.u.spectrum().map(Spectrum::filter_nyquist);
        let pressure = s.p.spectrum().filter_nyquist();
        let phi_t = g.sample(|x, y| (ms.phi_t)(x, y, t)).spectrum().filter_nyquist();
        let u_t = sample_vector(g, |x, y| (ms.u_t)(x, y, t)).spectrum().map(Spectrum::filter_nyquist);
        let mu = chemical_potential(&phi, p);

        let mut f_phi = phi_t;
        f_phi += &advect(&u, &phi);
        f_phi.axpy(-p.mobility, &mu.laplacian());

        let mut f_u = u_t;
        f_u.axpy(1.0, &advect_vector(&u, &u));
        f_u.axpy(-p.nu, &u.laplacian());
        f_u.axpy(1.0, &pressure.gradient());
        f_u.axpy(-1.0, &scaled_gradient(&mu, &phi));
        (f_phi, f_u)
    }
}

impl Forcing for ManufacturedForcing<'_> {
    fn phase(&self, t: f64) -> Option<Spectrum> {
        Some(self.fields(t).0)
    }
    fn momentum(&self, t: f64) -> Option<VectorSpectrum> {
        Some(self.fields(t).1)
    }
}

pub fn forcing_fields(
    ms: &ManufacturedSolution,
    t: f64,
    params: &ModelParams,
    grid: &Arc<Grid2>,
) -> (ScalarField, VectorField2) {
    let f = ManufacturedForcing { solution: ms, params: *params, grid: Arc::clone(grid) };
    let (fp, fu) = f.fields(t);
    (fp.to_field(), fu.to_field())
}

/// Forcing evaluated once per time level and reused by both equations.
struct CachedForcing<'a> {
    inner: ManufacturedForcing<'a>,
    cache: std::cell::RefCell<Option<(f64, Spectrum, VectorSpectrum)>>,
}

impl CachedForcing<'_> {
    fn get(&self, t: f64) -> (Spectrum, VectorSpectrum) {
        let mut c = self.cache.borrow_mut();
        if let Some((tc, fp, fu)) = c.as_ref() {
            if *tc == t {
                return (fp.clone(), fu.clone());
            }
        }
        let (fp, fu) = self.inner.fields(t);
        *c = Some((t, fp.clone(), fu.clone()));
        (fp, fu)
    }
}

impl Forcing for CachedForcing<'_> {
    fn phase(&self, t: f64) -> Option<Spectrum> {
        Some(self.get(t).0)
    }
    fn momentum(&self, t: f64) -> Option<VectorSpectrum> {
        Some(self.get(t).1)
    }
}

/// Discrete error norms against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub phi_l2: f64,
    /// Full H1 norm of the phase error.
    pub phi_h1: f64,
    pub u_l2: f64,
    /// `||grad e_u||`
    pub u_h1: f64,
    pub p_l2: f64,
    /// `||grad e_p||`
    pub p_grad: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 6] {
        [self.phi_l2, self.phi_h1, self.u_l2, self.u_h1, self.p_l2, self.p_grad]
    }

    pub const NAMES: [&'static str; 6] = ["phi_l2", "phi_h1", "u_l2", "u_h1", "p", "p_grad"];
}

/// Errors of explicit fields against the exact solution at `t`.
pub fn field_errors(phi: &Spectrum, u: &VectorSpectrum, p: &Spectrum, ms: &ManufacturedSolution, t: f64) -> ErrorNorms {
    let grid = phi.grid();
    let exact = sample(ms, t, grid);
    let e_phi = phi - &exact.phi.spectrum().filter_nyquist();
    let eu = exact.u.spectrum().map(Spectrum::filter_nyquist);
    let e_u = VectorSpectrum { x: &u.x - &eu.x, y: &u.y - &eu.y };
    let e_p = p - &exact.p.spectrum().filter_nyquist();
    let (l2, semi) = (e_phi.l2_norm(), e_phi.h1_seminorm());
    ErrorNorms {
        phi_l2: l2,
        phi_h1: l2.hypot(semi),
        u_l2: e_u.l2_norm(),
        u_h1: e_u.h1_seminorm(),
        p_l2: e_p.l2_norm(),
        p_grad: e_p.h1_seminorm(),
    }
}

/// Errors of the newest relaxed state against the exact solution at `t`.
pub fn error_norms(state: &SolverState, ms: &ManufacturedSolution, t: f64) -> ErrorNorms {
    let l = state.latest();
    field_errors(&l.phi, &l.u, &l.p, ms, t)
}

/// Setup of a temporal convergence run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub params: ModelParams,
    pub modes: usize,
    pub domain: [f64; 2],
    pub t_end: f64,
}

impl Default for StudyConfig {
    /// `lambda = 1, M = 1e-3, eps = 1, gamma = 0, nu = 0.05`, `kappa0 = 1`,
    /// 50x50 modes on `[-1, 1]^2`, `T = 0.2`.
    fn default() -> Self {
        StudyConfig {
            params: ModelParams {
                lambda: 1.0,
                mobility: 1e-3,
                eps: 1.0,
                gamma: 0.0,
                nu: 0.05,
                kappa0: 1.0,
                chi: 0.0,
                gravity: [0.0, -1.0],
            },
            modes: 50,
            domain: [-1.0, 1.0],
            t_end: 0.2,
        }
    }
}

/// Outcome of one manufactured-solution run.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedRun {
    pub dt: f64,
    pub steps: usize,
    pub errors: ErrorNorms,
    /// `max |1 - xi|` over all steps.
    pub max_xi_drift: f64,
    /// `max |R - (E + kappa0)| / R` over all steps.
    pub max_relative_gap: f64,
}

/// Run the manufactured problem to `config.t_end` with an exactly seeded
/// history of depth `order`.
pub fn run_manufactured(
    order: usize,
    dt: f64,
    config: &StudyConfig,
    ms: &ManufacturedSolution,
) -> Result<ManufacturedRun, VerificationError> {
    let total = (config.t_end / dt).round();
    if !(total >= 1.0) || (total * dt - config.t_end).abs() > 1e-9 * config.t_end {
        return Err(VerificationError::Incommensurate { t_end: config.t_end, dt });
    }
    let total = total as usize;
    if total < order {
        return Err(VerificationError::TooShort { t_end: config.t_end, dt, order });
    }
    let grid = Grid2::square(config.modes, config.domain[0], config.domain[1])?;
    let params = config.params;
    let mut state = SolverState::seeded(params, order, dt, 0.0, |t| exact_level(ms, t, &params, &grid))?;
    let forcing = CachedForcing {
        inner: ManufacturedForcing { solution: ms, params, grid: Arc::clone(&grid) },
        cache: std::cell::RefCell::new(None),
    };
    let mut max_xi_drift: f64 = 0.0;
    let mut max_relative_gap: f64 = 0.0;
    let steps = total + 1 - order;
    for n in 0..steps {
        let d = state.step(dt, &forcing)?;
        debug_assert_eq!(d.step, n + 1);
        max_xi_drift = max_xi_drift.max((1.0 - d.xi).abs());
        max_relative_gap = max_relative_gap.max(d.gap / d.r);
    }
    let errors = error_norms(&state, ms, total as f64 * dt);
    Ok(ManufacturedRun { dt, steps, errors, max_xi_drift, max_relative_gap })
}

/// Observed orders between two consecutive ladder entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedOrders(pub [f64; 6]);

impl ObservedOrders {
    pub fn between(coarse: &ManufacturedRun, fine: &ManufacturedRun) -> Self {
        let ratio = (coarse.dt / fine.dt).ln();
        let (a, b) = (coarse.errors.as_array(), fine.errors.as_array());
        let mut out = [0.0; 6];
        for i in 0..6 {
            out[i] = (a[i] / b[i]).ln() / ratio;
        }
        ObservedOrders(out)
    }

    pub fn phi_l2(&self) -> f64 {
        self.0[0]
    }
    pub fn phi_h1(&self) -> f64 {
        self.0[1]
    }
    pub fn u_l2(&self) -> f64 {
        self.0[2]
    }
    pub fn u_h1(&self) -> f64 {
        self.0[3]
    }
    pub fn p_l2(&self) -> f64 {
        self.0[4]
    }
    pub fn p_grad(&self) -> f64 {
        self.0[5]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub order: usize,
    pub runs: Vec<ManufacturedRun>,
    /// `orders[i]` compares `runs[i]` with `runs[i + 1]`.
    pub orders: Vec<ObservedOrders>,
    /// Every error norm shrinks along the ladder.
    pub monotone: bool,
    /// Only one pair of runs, so each order is a single estimate.
    pub single_estimate: bool,
}

impl ConvergenceTable {
    /// Orders from the finest pair.
    pub fn asymptotic(&self) -> Option<&ObservedOrders> {
        self.orders.last()
    }
}

/// Temporal convergence study over a strictly decreasing `dt` ladder; each
/// entry runs on its own thread.
pub fn convergence_study(
    order: usize,
    dt_list: &[f64],
    config: &StudyConfig,
) -> Result<ConvergenceTable, VerificationError> {
    if dt_list.len() < 2 || dt_list.iter().any(|d| !(d.is_finite() && *d > 0.0)) || dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(VerificationError::Ladder);
    }
    let ms = ManufacturedSolution::trigonometric();
    let results: Vec<Result<ManufacturedRun, VerificationError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = dt_list
            .iter()
            .map(|&dt| {
                let ms = &ms;
                scope.spawn(move || run_manufactured(order, dt, config, ms))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ladder worker panicked")).collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let orders: Vec<ObservedOrders> = runs.windows(2).map(|w| ObservedOrders::between(&w[0], &w[1])).collect();
    let monotone = runs.windows(2).all(|w| {
        w[0].errors.as_array().iter().zip(w[1].errors.as_array()).all(|(a, b)| b < *a)
    });
    Ok(ConvergenceTable { order, single_estimate: runs.len() == 2, runs, orders, monotone })
}
