use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chns_core::io::{self, keys_help, parse_pairs, validate, ConfigError, RawConfig, RunError};
use chns_core::scenarios::{preset, PRESET_NAMES};

#[derive(Parser)]
#[command(name = "chns", version, about = "Energy-stable Cahn-Hilliard-Navier-Stokes solver on periodic domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics.csv, snapshots and a manifest.
    #[command(after_help = keys_help())]
    Run(RunArgs),
    /// Temporal convergence study on the manufactured solution.
    Converge {
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Comma-separated, strictly decreasing time steps.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 5e-3, 2.5e-3, 1.25e-3])]
        dt: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-emit original and modified energy curves from a run directory.
    Energy {
        /// Run directory holding diagnostics.csv and run_manifest.txt.
        dir: PathBuf,
        /// Output file (default: <dir>/energy.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Energy shift; read from the manifest when omitted.
        #[arg(long)]
        kappa0: Option<f64>,
    },
    /// List the scenario presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// BDF order 1..=5 (default 2).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tend: Option<f64>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot cadence in steps (default: first and last step).
    #[arg(long)]
    snap_every: Option<usize>,
    /// Diagnostics cadence in steps (default 1).
    #[arg(long)]
    diag_every: Option<usize>,
    #[arg(long)]
    kappa0: Option<f64>,
    /// Extra `key=value` overrides, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn raw_config(&self) -> Result<RawConfig, RunError> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| RunError::Io { context: format!("reading {}", path.display()), source })?;
                parse_pairs(&text)?
            }
            None => RawConfig::default(),
        };
        let flags: [(&str, Option<String>); 9] = [
            ("scenario", self.scenario.clone()),
            ("order", self.order.map(|v| v.to_string())),
            ("dt", self.dt.map(|v| format!("{v:?}"))),
            ("tend", self.tend.map(|v| format!("{v:?}"))),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("snap_every", self.snap_every.map(|v| v.to_string())),
            ("diag_every", self.diag_every.map(|v| v.to_string())),
            ("kappa0", self.kappa0.map(|v| format!("{v:?}"))),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v);
            }
        }
        let extra = self.set.join("\n");
        for (k, v) in parse_pairs(&extra)?.entries {
            raw.set(&k, v);
        }
        Ok(raw)
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Converge { order, dt, out } => converge(order, &dt, &out),
        Command::Energy { dir, out, kappa0 } => energy(&dir, out, kappa0),
        Command::Presets => {
            for name in PRESET_NAMES {
                let s = preset(name).expect("listed preset exists");
                let p = s.params;
                println!(
                    "{name:<14} {n}x{n} dt={dt:e} T={t} lambda={l:e} M={m:e} eps={e:e} gamma={g:e} nu={nu} chi={chi} g=({gx},{gy}) kappa0={k:e}",
                    n = s.modes,
                    dt = s.dt,
                    t = s.t_end,
                    l = p.lambda,
                    m = p.mobility,
                    e = p.eps,
                    g = p.gamma,
                    nu = p.nu,
                    chi = p.chi,
                    gx = p.gravity[0],
                    gy = p.gravity[1],
                    k = p.kappa0,
                );
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn run(args: &RunArgs) -> Result<(), RunError> {
    let config = validate(&args.raw_config()?)?;
    eprintln!(
        "running {} (k = {}, {} steps of {:e}) into {}",
        config.scenario.name,
        config.order,
        config.steps(),
        config.scenario.dt,
        config.out.display()
    );
    let summary = io::run(&config)?;
    println!(
        "finished {} steps, t = {}, E = {:.10e}, R = {:.10e}; diagnostics in {}",
        summary.steps,
        summary.t_end,
        summary.final_energy,
        summary.final_r,
        summary.diagnostics.display()
    );
    Ok(())
}

fn converge(order: usize, ladder: &[f64], out: &std::path::Path) -> Result<(), RunError> {
    let (table, path) = io::converge(order, ladder, out)?;
    println!("k = {order}; table written to {}", path.display());
    println!("{:>12} {:>12} {:>12} {:>12}", "dt", "order phi", "order u", "order grad p");
    for (pair, o) in table.runs.windows(2).zip(&table.orders) {
        println!("{:>12.4e} {:>12.3} {:>12.3} {:>12.3}", pair[1].dt, o.phi_l2(), o.u_l2(), o.p_grad());
    }
    if table.single_estimate {
        println!("note: two-entry ladder, each order is a single estimate");
    }
    if !table.monotone {
        println!("warning: errors do not decrease monotonically along the ladder");
    }
    Ok(())
}

fn energy(dir: &std::path::Path, out: Option<PathBuf>, kappa0: Option<f64>) -> Result<(), RunError> {
    let kappa0 = match kappa0 {
        Some(k) if k.is_finite() && k > 0.0 => k,
        Some(k) => {
            return Err(ConfigError::Validation { key: "kappa0".into(), message: format!("must be positive, got {k}") }.into())
        }
        None => io::manifest_kappa0(dir)?,
    };
    let path = io::energy(dir, kappa0, out.as_deref())?;
    println!("{}", path.display());
    Ok(())
}
