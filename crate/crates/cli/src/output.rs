//! CSV emission. Reals are written with 17 significant digits.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use entroflux_core::linalg::DensityMatrix;
use entroflux_core::{EnsembleStatistics, EntropyBoundReport, TrajectoryRecord};

use crate::error::CliError;

pub const ENSEMBLE_FILE: &str = "ensemble.csv";
pub const BOUND_REPORT_FILE: &str = "bound_report.csv";
pub const SWEEP_FILE: &str = "alpha_sweep.csv";
pub const TRAJECTORY_DIR: &str = "trajectories";

/// `x` in scientific notation with 17 significant digits. Negative zero is
/// written as zero.
pub fn fmt_real(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn fmt_flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn state_header(dim: usize) -> Vec<String> {
    if dim == 2 {
        return vec!["x".into(), "y".into(), "z".into()];
    }
    let mut cols = Vec::with_capacity(2 * dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            cols.push(format!("rho_{i}_{j}_re"));
            cols.push(format!("rho_{i}_{j}_im"));
        }
    }
    cols
}

/// Bloch components for a qubit, otherwise the row-major entries of `ρ`.
fn state_fields(rho: &DensityMatrix) -> Vec<String> {
    let m = rho.matrix();
    if rho.dim() == 2 {
        let off = m[(0, 1)];
        let x = 2.0 * off.re;
        let y = -2.0 * off.im;
        let z = m[(0, 0)].re - m[(1, 1)].re;
        return vec![fmt_real(x), fmt_real(y), fmt_real(z)];
    }
    m.as_slice()
        .iter()
        .flat_map(|c| [fmt_real(c.re), fmt_real(c.im)])
        .collect()
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub fn write_ensemble(path: &Path, stats: &EnsembleStatistics) -> Result<(), CliError> {
    let dim = stats.mean_state.first().map_or(2, DensityMatrix::dim);
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(state_header(dim));
    header.extend(["S_mean", "S_se", "quantumness_mean"].map(String::from));
    w.write_record(&header)?;
    for k in 0..stats.len() {
        let mut row = vec![fmt_real(stats.times[k])];
        row.extend(state_fields(&stats.mean_state[k]));
        row.push(fmt_real(stats.mean_entropy[k]));
        row.push(fmt_real(stats.entropy_se[k]));
        row.push(fmt_real(stats.quantumness_mean[k]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, record: &TrajectoryRecord) -> Result<(), CliError> {
    let dim = record.states.first().map_or(2, DensityMatrix::dim);
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(state_header(dim));
    header.extend(["S", "dW", "repair", "y"].map(String::from));
    w.write_record(&header)?;
    for k in 0..record.len() {
        let mut row = vec![fmt_real(record.times[k])];
        row.extend(state_fields(&record.states[k]));
        row.push(fmt_real(record.entropies[k]));
        row.push(fmt_real(record.dw_draws[k]));
        row.push(fmt_real(record.repair_magnitudes[k]));
        row.push(fmt_real(record.measurement[k]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(TRAJECTORY_DIR).join(format!("trajectory_{index:06}.csv"))
}

pub fn write_bound_report(path: &Path, report: &EntropyBoundReport) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "lhs_rate", "lhs_se", "rhs_bound", "sufficient", "violation"])?;
    for k in 0..report.len() {
        w.write_record([
            fmt_real(report.times[k]),
            fmt_real(report.lhs_rate[k]),
            fmt_real(report.lhs_se[k]),
            fmt_real(report.rhs_bound[k]),
            fmt_flag(report.sufficient_flag[k]),
            fmt_flag(report.violation_flag[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub z_threshold: f64,
    pub min_rhs_bound: f64,
    /// `None` when the sufficient condition never holds on the grid.
    pub first_sufficient_time: Option<f64>,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["alpha", "z_threshold", "min_rhs_bound", "first_sufficient_time"])?;
    for r in rows {
        w.write_record([
            fmt_real(r.alpha),
            fmt_real(r.z_threshold),
            fmt_real(r.min_rhs_bound),
            fmt_real(r.first_sufficient_time.unwrap_or(-1.0)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Short human-readable run summary printed after each command.
pub fn print_summary(out: &mut impl Write, stats: &EnsembleStatistics) -> std::io::Result<()> {
    writeln!(
        out,
        "{} trajectories, {} checkpoints, max total repair {:.3e}, {} flagged",
        stats.n_trajectories,
        stats.len(),
        stats.max_total_repair,
        stats.flagged_trajectories
    )
}
