//! Configuration, run orchestration and file output.
//!
//! A run directory holds `diagnostics.csv`, `phi/u/p_NNNNNN.dat` snapshots
//! and `run_manifest.txt`; see [`run`].

mod config;
mod output;

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::stepper::{NoForcing, StepError};
use crate::verification::{convergence_study, ConvergenceTable, StudyConfig, VerificationError};

pub use config::{keys_help, parse_config, parse_pairs, validate, ConfigError, RawConfig, RunConfig, KEYS};
pub use output::{
    diagnostics_row, fmt_f64, read_diagnostics, read_snapshot, snapshot_name, write_convergence_csv,
    write_energy_curves, write_scalar_snapshot, write_snapshot_triple, write_vector_snapshot, DiagnosticsRecord,
    DiagnosticsWriter, Snapshot, DIAGNOSTICS_HEADER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(StepError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Io { .. } => EXIT_IO,
        }
    }
}

impl From<StepError> for RunError {
    fn from(e: StepError) -> Self {
        match e {
            // Bad parameters or order are configuration mistakes.
            StepError::Order(_) | StepError::TimeStep(_) | StepError::Model(_) => {
                RunError::Config(ConfigError::Validation { key: "params".into(), message: e.to_string() })
            }
            other => RunError::Numerical(other),
        }
    }
}

impl From<VerificationError> for RunError {
    fn from(e: VerificationError) -> Self {
        match e {
            VerificationError::Step(s) => s.into(),
            other => RunError::Config(ConfigError::Validation { key: "dt".into(), message: other.to_string() }),
        }
    }
}

fn io_context(context: impl Into<String>) -> impl FnOnce(io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub t_end: f64,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<usize>,
    pub final_energy: f64,
    pub final_r: f64,
}

fn manifest_text(config: &RunConfig) -> String {
    let mut s = String::new();
    s.push_str(&format!("# chns-core {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# fft: realfft {}, rustfft {}\n", "3", "6"));
    s.push_str(&format!("# steps {}\n", config.steps()));
    s.push_str(&config.to_text());
    s
}

/// Run a configuration to completion, writing into `config.out`.
///
/// Rows of `diagnostics.csv` are written for steps divisible by
/// `diag_every` (step 0 included) and snapshot triples for steps divisible
/// by `snap_every`, or only the first and last step when it is unset. On a
/// numerical failure the diagnostics written so far are kept.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let dir = &config.out;
    fs::create_dir_all(dir).map_err(io_context(format!("creating {}", dir.display())))?;
    fs::write(dir.join("run_manifest.txt"), manifest_text(config))
        .map_err(io_context(format!("writing manifest in {}", dir.display())))?;

    let mut state = config.scenario.initial_state(config.order).map_err(|e| match e {
        crate::scenarios::ScenarioError::Step(s) => RunError::from(s),
        other => RunError::Config(ConfigError::Validation { key: "scenario".into(), message: other.to_string() }),
    })?;
    state = state.with_debug_checks(config.debug_checks);

    let diag_path = dir.join("diagnostics.csv");
    let mut diag = DiagnosticsWriter::create(&diag_path).map_err(io_context(format!("creating {}", diag_path.display())))?;
    let steps = config.steps();
    let dt = config.scenario.dt;
    let wants_snapshot = |n: usize| match config.snap_every {
        Some(every) => n.is_multiple_of(every),
        None => n == 0 || n == steps,
    };
    let mut snapshots = Vec::new();
    let mut emit = |state: &crate::stepper::SolverState, d: &crate::stepper::StepDiagnostics| -> Result<(), RunError> {
        let n = d.step;
        if n.is_multiple_of(config.diag_every) {
            diag.write(d).map_err(io_context("writing diagnostics"))?;
        }
        if wants_snapshot(n) {
            write_snapshot_triple(dir, n, state.t(), &state.phi(), &state.u(), &state.p())
                .map_err(io_context(format!("writing snapshot {n}")))?;
            snapshots.push(n);
        }
        Ok(())
    };
    emit(&state, &state.current_diagnostics())?;
    let mut failure = None;
    for _ in 0..steps {
        match state.step(dt, &NoForcing) {
            Ok(d) => emit(&state, &d)?,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    diag.finish().map_err(io_context("flushing diagnostics"))?;
    if let Some(e) = failure {
        return Err(RunError::Numerical(e));
    }
    Ok(RunSummary {
        steps,
        t_end: state.t(),
        diagnostics: diag_path,
        snapshots,
        final_energy: state.energy(),
        final_r: state.r(),
    })
}

/// Run the manufactured-solution study and write `convergence_k{k}.csv`
/// into `out`. Returns the table and the file path.
pub fn converge(order: usize, dt_ladder: &[f64], out: &Path) -> Result<(ConvergenceTable, PathBuf), RunError> {
    if !(1..=5).contains(&order) {
        return Err(ConfigError::Validation { key: "order".into(), message: format!("must be in 1..=5, got {order}") }.into());
    }
    let table = convergence_study(order, dt_ladder, &StudyConfig::default())?;
    fs::create_dir_all(out).map_err(io_context(format!("creating {}", out.display())))?;
    let path = out.join(format!("convergence_k{order}.csv"));
    let mut buf = Vec::new();
    write_convergence_csv(&table, &mut buf).expect("writing to memory");
    fs::write(&path, buf).map_err(io_context(format!("writing {}", path.display())))?;
    Ok((table, path))
}

/// Re-emit energy curves from a run directory's diagnostics into
/// `energy.csv` next to them (or `dest`).
pub fn energy(run_dir: &Path, kappa0: f64, dest: Option<&Path>) -> Result<PathBuf, RunError> {
    let src = run_dir.join("diagnostics.csv");
    let rows = read_diagnostics(&src).map_err(io_context(format!("reading {}", src.display())))?;
    let path = dest.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("energy.csv"));
    let mut buf = Vec::new();
    write_energy_curves(&rows, kappa0, &mut buf).expect("writing to memory");
    let mut f = fs::File::create(&path).map_err(io_context(format!("creating {}", path.display())))?;
    f.write_all(&buf).map_err(io_context(format!("writing {}", path.display())))?;
    Ok(path)
}

/// `kappa0` recorded in a run manifest.
pub fn manifest_kappa0(run_dir: &Path) -> Result<f64, RunError> {
    let path = run_dir.join("run_manifest.txt");
    let text = fs::read_to_string(&path).map_err(io_context(format!("reading {}", path.display())))?;
    Ok(parse_config(&text)?.scenario.params.kappa0)
}
