use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::spectral::{ScalarField, VectorField2};
use crate::stepper::StepDiagnostics;
use crate::verification::{ConvergenceTable, ErrorNorms};

pub const DIAGNOSTICS_HEADER: &str = "step,t,R,R_tilde,xi,eta,E_original,gap,dissipation,mass,max_div_u";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_row(d: &StepDiagnostics) -> String {
    let values = [d.t, d.r, d.r_tilde, d.xi, d.eta, d.energy, d.gap, d.dissipation, d.mass, d.max_div_u];
    let mut row = d.step.to_string();
    for v in values {
        row.push(',');
        row.push_str(&fmt_f64(v));
    }
    row
}

pub struct DiagnosticsWriter {
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{DIAGNOSTICS_HEADER}")?;
        Ok(DiagnosticsWriter { out })
    }

    pub fn write(&mut self, d: &StepDiagnostics) -> io::Result<()> {
        writeln!(self.out, "{}", diagnostics_row(d))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// One row of a diagnostics file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub r: f64,
    pub r_tilde: f64,
    pub xi: f64,
    pub eta: f64,
    pub energy: f64,
    pub gap: f64,
    pub dissipation: f64,
    pub mass: f64,
    pub max_div_u: f64,
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_diagnostics(path: &Path) -> io::Result<Vec<DiagnosticsRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => return Err(invalid(format!("{} is not a diagnostics file", path.display()))),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(invalid(format!("row {}: expected 11 columns, got {}", n + 2, cols.len())));
        }
        let step = cols[0].parse().map_err(|_| invalid(format!("row {}: bad step", n + 2)))?;
        let mut v = [0.0; 10];
        for (slot, s) in v.iter_mut().zip(&cols[1..]) {
            *slot = s.parse().map_err(|_| invalid(format!("row {}: bad number `{s}`", n + 2)))?;
        }
        rows.push(DiagnosticsRecord {
            step,
            t: v[0],
            r: v[1],
            r_tilde: v[2],
            xi: v[3],
            eta: v[4],
            energy: v[5],
            gap: v[6],
            dissipation: v[7],
            mass: v[8],
            max_div_u: v[9],
        });
    }
    Ok(rows)
}

/// Energy curves re-emitted from diagnostics: the original energy and the
/// modified energy `R - kappa0`.
pub fn write_energy_curves(rows: &[DiagnosticsRecord], kappa0: f64, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "step,t,E_original,E_modified,relative_gap")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.step,
            fmt_f64(r.t),
            fmt_f64(r.energy),
            fmt_f64(r.r - kappa0),
            fmt_f64(r.gap / r.r)
        )?;
    }
    Ok(())
}

pub fn snapshot_name(field: &str, step: usize) -> String {
    format!("{field}_{step:06}.dat")
}

/// A field read back from a snapshot. Vector snapshots hold the x component
/// followed by the y component.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn components(&self) -> usize {
        self.data.len() / (self.nx * self.ny)
    }
}

fn write_raw(path: &Path, nx: usize, ny: usize, lx: f64, ly: f64, t: f64, parts: &[&[f64]]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    // `{}` prints the shortest representation that parses back exactly.
    writeln!(out, "{nx} {ny} {lx} {ly} {t}")?;
    for part in parts {
        for v in *part {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()
}

/// Text header `nx ny Lx Ly t` then little-endian `f64` samples, row-major
/// with x varying fastest.
pub fn write_scalar_snapshot(path: &Path, f: &ScalarField, t: f64) -> io::Result<()> {
    let g = f.grid();
    write_raw(path, g.nx(), g.ny(), g.lx(), g.ly(), t, &[f.samples()])
}

pub fn write_vector_snapshot(path: &Path, u: &VectorField2, t: f64) -> io::Result<()> {
    let g = u.grid();
    write_raw(path, g.nx(), g.ny(), g.lx(), g.ly(), t, &[u.x.samples(), u.y.samples()])
}

pub fn read_snapshot(path: &Path) -> io::Result<Snapshot> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad = || invalid(format!("{}: malformed header `{}`", path.display(), header.trim()));
    if fields.len() != 5 {
        return Err(bad());
    }
    let nx: usize = fields[0].parse().map_err(|_| bad())?;
    let ny: usize = fields[1].parse().map_err(|_| bad())?;
    let lx: f64 = fields[2].parse().map_err(|_| bad())?;
    let ly: f64 = fields[3].parse().map_err(|_| bad())?;
    let t: f64 = fields[4].parse().map_err(|_| bad())?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let cell = nx * ny * 8;
    if cell == 0 || bytes.is_empty() || bytes.len() % cell != 0 {
        return Err(invalid(format!("{}: payload of {} bytes does not match {nx}x{ny}", path.display(), bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok(Snapshot { nx, ny, lx, ly, t, data })
}

/// Writes `phi`, `u` and `p` snapshots for one step and returns their paths.
pub fn write_snapshot_triple(
    dir: &Path,
    step: usize,
    t: f64,
    phi: &ScalarField,
    u: &VectorField2,
    p: &ScalarField,
) -> io::Result<[PathBuf; 3]> {
    let paths = ["phi", "u", "p"].map(|f| dir.join(snapshot_name(f, step)));
    write_scalar_snapshot(&paths[0], phi, t)?;
    write_vector_snapshot(&paths[1], u, t)?;
    write_scalar_snapshot(&paths[2], p, t)?;
    Ok(paths)
}

/// Convergence table: one row per ladder entry with its errors, and the
/// observed orders against the previous (coarser) entry. `estimate` is
/// `single` when the ladder has only two entries.
pub fn write_convergence_csv(table: &ConvergenceTable, out: &mut impl Write) -> io::Result<()> {
    let names = ErrorNorms::NAMES;
    let mut header = String::from("k,dt,steps");
    for n in names {
        header.push_str(&format!(",err_{n}"));
    }
    for n in names {
        header.push_str(&format!(",order_{n}"));
    }
    header.push_str(",max_abs_1_minus_xi,estimate");
    writeln!(out, "{header}")?;
    let estimate = if table.single_estimate { "single" } else { "ladder" };
    for (i, run) in table.runs.iter().enumerate() {
        let mut row = format!("{},{},{}", table.order, fmt_f64(run.dt), run.steps);
        for e in run.errors.as_array() {
            row.push(',');
            row.push_str(&fmt_f64(e));
        }
        for j in 0..names.len() {
            row.push(',');
            if i > 0 {
                row.push_str(&fmt_f64(table.orders[i - 1].0[j]));
            }
        }
        row.push(',');
        row.push_str(&fmt_f64(run.max_xi_drift));
        row.push(',');
        row.push_str(if i > 0 { estimate } else { "" });
        writeln!(out, "{row}")?;
    }
    Ok(())
}
