//! Von Neumann entropy and the inequalities bounding its expected rate.
//!
//! For Hermitian probe `L`, the expected entropy rate of the conditioned
//! state is bounded below by
//!
//! ```text
//! E[<[M†, M]>] - 4 Var_L(E[ρ])
//! ```
//!
//! The supporting steps are exposed individually: the dissipator bound
//! ([`abe_gap`]), the back-action term ([`ito_entropy_rate_identity`]) and
//! the matrix inequality `-ln ρ ⪰ I - ρ` ([`lemma_gap`]).

use crate::dynamics::{dissipator, innovation, ModelSpec};
use crate::ensemble::EnsembleStatistics;
use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_eig, log_density, ComplexMatrix, DensityMatrix, DEFAULT_FLOOR};

/// Largest `max |L - L†|` accepted for a probe in variance and bound
/// evaluation.
pub const PROBE_HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Round-off allowance for the sign test of the bound. `√γ·√γ` differs
/// from `γ` in the last bit, which would otherwise flip exact boundary
/// points.
pub const SUFFICIENT_TOLERANCE: f64 = 1e-12;

/// Entropy shift from flooring above which an input is flagged.
pub const FLOOR_FLAG_THRESHOLD: f64 = 1e-8;

/// Number of standard errors the estimated rate may fall below the bound
/// before a checkpoint counts as a violation.
pub const VIOLATION_SE_MARGIN: f64 = 3.0;

fn xlogx(x: f64, floor: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.max(floor).ln()
    }
}

/// `-Σ λ ln λ` with `0 ln 0 = 0`, using the default eigenvalue floor.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    von_neumann_entropy_with_floor(rho, DEFAULT_FLOOR)
}

pub fn von_neumann_entropy_with_floor(rho: &DensityMatrix, floor: f64) -> f64 {
    entropy_of_spectrum(&rho.spectrum().eigenvalues, floor)
}

pub fn entropy_of_spectrum(eigenvalues: &[f64], floor: f64) -> f64 {
    -eigenvalues.iter().map(|&l| xlogx(l, floor)).sum::<f64>()
}

/// `|S(max(λ, ε)) - S(λ)|`, how much the floor perturbs the entropy.
pub fn floor_entropy_shift(rho: &DensityMatrix, floor: f64) -> f64 {
    let spectrum = rho.spectrum().eigenvalues;
    let exact: f64 = spectrum.iter().map(|&l| xlogx(l, f64::MIN_POSITIVE)).sum();
    let floored: f64 = spectrum.iter().map(|&l| xlogx(l.max(floor), floor)).sum();
    (floored - exact).abs()
}

pub fn is_floor_sensitive(rho: &DensityMatrix, floor: f64) -> bool {
    floor_entropy_shift(rho, floor) > FLOOR_FLAG_THRESHOLD
}

fn require_hermitian_probe(l: &ComplexMatrix) -> Result<()> {
    let asym = l.max_asymmetry();
    if asym > PROBE_HERMITIAN_TOLERANCE {
        Err(Error::NonHermitianProbe { max_asymmetry: asym })
    } else {
        Ok(())
    }
}

/// `Tr(L²ρ) - Tr(Lρ)²` for Hermitian `L`.
pub fn observable_variance(l: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    l.check_same_dim(rho.matrix())?;
    require_hermitian_probe(l)?;
    let mean = l.trace_product(rho.matrix()).re;
    let second = (l * l).trace_product(rho.matrix()).re;
    Ok(second - mean * mean)
}

/// `Tr([M†, M] ρ)`, zero for normal `M`.
pub fn quantumness(m: &ComplexMatrix, rho: &DensityMatrix) -> Result<f64> {
    m.check_same_dim(rho.matrix())?;
    Ok(commutator(&m.dagger(), m)?.trace_product(rho.matrix()).re)
}

/// `-Tr{D[A]ρ · ln ρ} - Tr([A†, A]ρ)`, non-negative for every `A`.
pub fn abe_gap(a: &ComplexMatrix, rho: &DensityMatrix, floor: f64) -> Result<f64> {
    let log = log_density(rho, floor)?;
    let d = dissipator(a, rho)?;
    Ok(-d.trace_product(&log).re - quantumness(a, rho)?)
}

/// Both sides of the back-action identity `Tr[ρ⁻¹ (H[L]ρ)²] = 4 Var_L(ρ)`.
///
/// The two sides agree when `[L, ρ] = 0`; otherwise `lhs > rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItoIdentity {
    pub lhs: f64,
    pub rhs: f64,
}

impl ItoIdentity {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.max(1e-12)
    }
}

pub fn ito_entropy_rate_identity(l: &ComplexMatrix, rho: &DensityMatrix, floor: f64) -> Result<ItoIdentity> {
    crate::linalg::check_floor(floor)?;
    let rhs = 4.0 * observable_variance(l, rho)?;
    let inverse = rho.spectrum().map(|x| 1.0 / x.max(floor));
    let h = innovation(l, rho)?;
    let lhs = (&inverse * &h).trace_product(&h).re;
    Ok(ItoIdentity { lhs, rhs })
}

/// `Tr([M†, M] E[ρ]) - 4 Var_L(E[ρ])`.
pub fn bound_rhs(model: &ModelSpec, mean_state: &DensityMatrix) -> Result<f64> {
    require_hermitian_probe(model.probe())?;
    Ok(quantumness(model.decoherence(), mean_state)? - 4.0 * observable_variance(model.probe(), mean_state)?)
}

/// Whether the bound guarantees a non-decreasing expected entropy.
pub fn sufficient_condition(model: &ModelSpec, mean_state: &DensityMatrix) -> Result<bool> {
    Ok(bound_rhs(model, mean_state)? >= -SUFFICIENT_TOLERANCE)
}

/// Smallest eigenvalue of `-ln ρ - (I - ρ)`.
pub fn lemma_gap(rho: &DensityMatrix, floor: f64) -> Result<f64> {
    let neg_log = log_density(rho, floor)?.scale_real(-1.0);
    let complement = &ComplexMatrix::identity(rho.dim()) - rho.matrix();
    Ok(hermitian_eig(&(&neg_log - &complement))?.min_eigenvalue())
}

/// Finite-difference derivative of `values` over `times`: central
/// differences inside, one-sided at the ends. Standard errors are
/// propagated treating the neighbouring estimates as independent.
pub fn finite_difference_rate(times: &[f64], values: &[f64], se: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = times.len();
    if n < 3 {
        return Err(Error::TooFewCheckpoints { required: 3, got: n });
    }
    if values.len() != n || se.len() != n {
        return Err(Error::InvalidParameter("times, values and errors differ in length".into()));
    }
    let mut rate = Vec::with_capacity(n);
    let mut rate_se = Vec::with_capacity(n);
    for k in 0..n {
        let (lo, hi) = match k {
            0 => (0, 1),
            k if k == n - 1 => (n - 2, n - 1),
            k => (k - 1, k + 1),
        };
        let h = times[hi] - times[lo];
        rate.push((values[hi] - values[lo]) / h);
        rate_se.push(se[hi].hypot(se[lo]) / h);
    }
    Ok((rate, rate_se))
}

/// Centered moving average; the window shrinks near the ends. A window of
/// 0 or 1 returns the input.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Estimated `dE[S_t]/dt` and its standard error.
pub fn entropy_rate_estimate(stats: &EnsembleStatistics) -> Result<(Vec<f64>, Vec<f64>)> {
    finite_difference_rate(&stats.times, &stats.mean_entropy, &stats.entropy_se)
}

/// Checkpoint-wise comparison of the estimated entropy rate with the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyBoundReport {
    pub times: Vec<f64>,
    pub lhs_rate: Vec<f64>,
    pub lhs_se: Vec<f64>,
    pub rhs_bound: Vec<f64>,
    pub sufficient_flag: Vec<bool>,
    pub violation_flag: Vec<bool>,
}

impl EntropyBoundReport {
    pub fn violations(&self) -> usize {
        self.violation_flag.iter().filter(|&&v| v).count()
    }

    pub fn any_violation(&self) -> bool {
        self.violations() > 0
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn build_bound_report(model: &ModelSpec, stats: &EnsembleStatistics) -> Result<EntropyBoundReport> {
    build_bound_report_smoothed(model, stats, 1)
}

/// As [`build_bound_report`], smoothing the entropy series with a moving
/// average of `window` checkpoints before differencing.
pub fn build_bound_report_smoothed(
    model: &ModelSpec,
    stats: &EnsembleStatistics,
    window: usize,
) -> Result<EntropyBoundReport> {
    require_hermitian_probe(model.probe())?;
    let smoothed = moving_average(&stats.mean_entropy, window);
    let (lhs_rate, lhs_se) = finite_difference_rate(&stats.times, &smoothed, &stats.entropy_se)?;
    let rhs_bound = stats
        .mean_state
        .iter()
        .map(|rho| bound_rhs(model, rho))
        .collect::<Result<Vec<_>>>()?;
    let sufficient_flag = rhs_bound.iter().map(|&b| b >= -SUFFICIENT_TOLERANCE).collect();
    let violation_flag = lhs_rate
        .iter()
        .zip(&lhs_se)
        .zip(&rhs_bound)
        .map(|((&rate, &se), &bound)| rate < bound - VIOLATION_SE_MARGIN * se)
        .collect();
    Ok(EntropyBoundReport {
        times: stats.times.clone(),
        lhs_rate,
        lhs_se,
        rhs_bound,
        sufficient_flag,
        violation_flag,
    })
}
