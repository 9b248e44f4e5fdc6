//! Fourier pseudo-spectral solver for the Cahn-Hilliard-Navier-Stokes
//! two-phase flow system with decoupled, linear, unconditionally
//! energy-stable GSAV time stepping of orders 1 to 5.
//!
//! * [`spectral`]: periodic grid, transforms, operators, elliptic solves.
//! * [`model`]: parameters, potentials, energy and forcing terms.
//! * [`stepper`]: the time step and its state.
//! * [`verification`]: manufactured solutions and convergence studies.
//! * [`scenarios`]: initial conditions and named run presets.
//! * [`io`]: run configuration, orchestration and file output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod model;
pub mod scenarios;
pub mod spectral;
pub mod stepper;
pub mod verification;

pub use model::ModelParams;
pub use spectral::{Grid2, ScalarField, Spectrum, VectorField2, VectorSpectrum};
pub use stepper::{BdfScheme, Forcing, NoForcing, SolverState, StepDiagnostics, StepError};
