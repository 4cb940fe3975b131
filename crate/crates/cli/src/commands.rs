//! Subcommand drivers. Each returns `Ok(())` for exit code 0.

use std::io::Write;

use entroflux_core::ensemble::run_ensemble;
use entroflux_core::entropy::{bound_rhs, build_bound_report_smoothed, observable_variance, SUFFICIENT_TOLERANCE};
use entroflux_core::integrator::{propagate_me, simulate_trajectory_with_rng, trajectory_rng};
use entroflux_core::qubit::{z_threshold, QubitScenario};
use entroflux_core::{EnsembleStatistics, EntropyBoundReport};

use crate::config::{Emit, ResolvedRun};
use crate::error::CliError;
use crate::output::{self, SweepRow};

fn integration(e: entroflux_core::Error) -> CliError {
    CliError::Integration(e.to_string())
}

fn run_stats(run: &ResolvedRun) -> Result<EnsembleStatistics, CliError> {
    run_ensemble(&run.model, &run.initial_state, &run.ensemble).map_err(integration)
}

fn write_trajectories(run: &ResolvedRun) -> Result<(), CliError> {
    for index in 0..run.ensemble.n_trajectories {
        let mut rng = trajectory_rng(run.ensemble.master_seed, index as u64);
        let record = simulate_trajectory_with_rng(&run.model, &run.initial_state, &run.ensemble.integrator, &mut rng)
            .map_err(|e| {
                integration(entroflux_core::Error::Trajectory {
                    trajectory: index,
                    source: Box::new(e),
                })
            })?;
        output::write_trajectory(&output::trajectory_path(&run.output_dir, index), &record)?;
    }
    Ok(())
}

fn bound_report(run: &ResolvedRun, stats: &EnsembleStatistics) -> Result<EntropyBoundReport, CliError> {
    build_bound_report_smoothed(&run.model, stats, run.smoothing_window.max(1)).map_err(integration)
}

/// Rejects a non-Hermitian probe before any computation.
fn require_hermitian_probe(run: &ResolvedRun) -> Result<(), CliError> {
    observable_variance(run.model.probe(), &run.initial_state)
        .map(|_| ())
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Runs the ensemble and writes the requested files.
pub fn simulate(run: &ResolvedRun, log: &mut impl Write) -> Result<EnsembleStatistics, CliError> {
    if run.emit.contains(&Emit::BoundReport) {
        require_hermitian_probe(run)?;
    }
    let stats = run_stats(run)?;
    if run.emit.contains(&Emit::Ensemble) {
        output::write_ensemble(&run.output_dir.join(output::ENSEMBLE_FILE), &stats)?;
    }
    if run.emit.contains(&Emit::Trajectories) {
        write_trajectories(run)?;
    }
    if run.emit.contains(&Emit::BoundReport) {
        let report = bound_report(run, &stats)?;
        output::write_bound_report(&run.output_dir.join(output::BOUND_REPORT_FILE), &report)?;
    }
    output::print_summary(log, &stats)?;
    Ok(stats)
}

/// Runs the ensemble, always writes the bound report, and fails with
/// [`CliError::BoundViolation`] if any checkpoint violates the bound.
pub fn verify_bound(run: &ResolvedRun, log: &mut impl Write) -> Result<EntropyBoundReport, CliError> {
    require_hermitian_probe(run)?;
    let stats = run_stats(run)?;
    if run.emit.contains(&Emit::Ensemble) {
        output::write_ensemble(&run.output_dir.join(output::ENSEMBLE_FILE), &stats)?;
    }
    if run.emit.contains(&Emit::Trajectories) {
        write_trajectories(run)?;
    }
    let report = bound_report(run, &stats)?;
    output::write_bound_report(&run.output_dir.join(output::BOUND_REPORT_FILE), &report)?;
    output::print_summary(log, &stats)?;
    let sufficient = report.sufficient_flag.iter().filter(|&&s| s).count();
    writeln!(
        log,
        "bound checked at {} checkpoints: {} violations, sufficient condition at {}",
        report.len(),
        report.violations(),
        sufficient
    )?;
    if report.any_violation() {
        return Err(CliError::BoundViolation {
            violations: report.violations(),
            checkpoints: report.len(),
        });
    }
    Ok(report)
}

/// One row per α, in input order, from the exact unconditional evolution.
pub fn sweep_rows(run: &ResolvedRun, alphas: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let base = run
        .scenario
        .ok_or_else(|| CliError::Config("sweep-alpha requires a qubit scenario".into()))?;
    if !base.control.is_open_loop() {
        return Err(CliError::Config(format!(
            "sweep-alpha requires an open-loop control law, got `{}`",
            base.control.name()
        )));
    }
    if alphas.is_empty() {
        return Err(CliError::Config("no alphas given".into()));
    }
    let config = |e: entroflux_core::Error| CliError::Config(e.to_string());
    let u = base.control.evaluate(&run.initial_state).map_err(config)?;
    alphas
        .iter()
        .map(|&alpha| {
            let scenario = QubitScenario::new(base.kappa, alpha, base.control).map_err(config)?;
            let model = scenario.model().map_err(config)?;
            let record =
                propagate_me(&model, &run.initial_state, &run.ensemble.integrator, u).map_err(integration)?;
            let mut min_rhs = f64::INFINITY;
            let mut first_sufficient = None;
            for (t, rho) in record.times.iter().zip(&record.states) {
                let rhs = bound_rhs(&model, rho).map_err(integration)?;
                min_rhs = min_rhs.min(rhs);
                if first_sufficient.is_none() && rhs >= -SUFFICIENT_TOLERANCE {
                    first_sufficient = Some(*t);
                }
            }
            Ok(SweepRow {
                alpha,
                z_threshold: z_threshold(alpha).map_err(config)?,
                min_rhs_bound: min_rhs,
                first_sufficient_time: first_sufficient,
            })
        })
        .collect()
}

pub fn sweep_alpha(run: &ResolvedRun, alphas: &[f64], log: &mut impl Write) -> Result<Vec<SweepRow>, CliError> {
    let rows = sweep_rows(run, alphas)?;
    let path = run.output_dir.join(output::SWEEP_FILE);
    output::write_sweep(&path, &rows)?;
    writeln!(log, "{} alphas written to {}", rows.len(), path.display())?;
    Ok(rows)
}

/// Parses a comma-separated list of reals.
pub fn parse_alphas(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .ok_or_else(|| CliError::Config(format!("invalid alpha {s:?}")))
        })
        .collect()
}
