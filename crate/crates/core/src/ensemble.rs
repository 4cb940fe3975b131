//! Seeded trajectory ensembles and their checkpoint statistics.
//!
//! Trajectories are grouped into fixed blocks of consecutive indices. Each
//! block is reduced in index order, and block results are merged in block
//! order, so the statistics do not depend on the number of workers.

use rayon::prelude::*;

use crate::dynamics::ModelSpec;
use crate::entropy::{von_neumann_entropy, von_neumann_entropy_with_floor, PROBE_HERMITIAN_TOLERANCE};
use crate::error::{Error, Result};
use crate::integrator::{drive_trajectory, trajectory_rng, IntegratorConfig, TrajectoryRecord, REPAIR_FLAG_THRESHOLD};
use crate::linalg::{commutator, ComplexMatrix, DensityMatrix, C64};

const BLOCK_SIZE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub worker_count: usize,
    pub integrator: IntegratorConfig,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(Error::InvalidParameter("n_trajectories must be at least 1".into()));
        }
        if self.worker_count < 1 {
            return Err(Error::InvalidParameter("worker_count must be at least 1".into()));
        }
        self.integrator.validate()
    }
}

/// Running mean and sum of squared deviations, merged with Chan's update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n / n;
        self.m2 += other.m2 + delta * delta * self.n * other.n / n;
        self.n = n;
    }

    /// Standard error of the mean from the unbiased sample variance.
    fn standard_error(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

/// Quantities evaluated on each recorded state.
struct Observables {
    dim: usize,
    floor: f64,
    quantumness_op: ComplexMatrix,
    probe: Option<(ComplexMatrix, ComplexMatrix)>,
}

impl Observables {
    fn new(model: &ModelSpec, floor: f64) -> Result<Self> {
        let m = model.decoherence();
        let l = model.probe();
        let probe = (l.max_asymmetry() <= PROBE_HERMITIAN_TOLERANCE).then(|| (l.clone(), l * l));
        Ok(Self {
            dim: model.dim(),
            floor,
            quantumness_op: commutator(&m.dagger(), m)?,
            probe,
        })
    }
}

#[derive(Clone, Debug)]
struct CheckpointAccumulator {
    entries_re: Vec<Moments>,
    entries_im: Vec<Moments>,
    entropy: Moments,
    entropy_min: f64,
    entropy_max: f64,
    quantumness: Moments,
    probe_variance: Moments,
}

impl CheckpointAccumulator {
    fn new(dim: usize) -> Self {
        Self {
            entries_re: vec![Moments::default(); dim * dim],
            entries_im: vec![Moments::default(); dim * dim],
            entropy: Moments::default(),
            entropy_min: f64::INFINITY,
            entropy_max: f64::NEG_INFINITY,
            quantumness: Moments::default(),
            probe_variance: Moments::default(),
        }
    }

    fn push(&mut self, obs: &Observables, rho: &DensityMatrix, entropy: f64) {
        for (k, z) in rho.matrix().as_slice().iter().enumerate() {
            self.entries_re[k].push(z.re);
            self.entries_im[k].push(z.im);
        }
        self.entropy.push(entropy);
        self.entropy_min = self.entropy_min.min(entropy);
        self.entropy_max = self.entropy_max.max(entropy);
        self.quantumness.push(obs.quantumness_op.trace_product(rho.matrix()).re);
        if let Some((l, l2)) = &obs.probe {
            let mean = l.trace_product(rho.matrix()).re;
            self.probe_variance.push(l2.trace_product(rho.matrix()).re - mean * mean);
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.entries_re.iter_mut().zip(&other.entries_re) {
            a.merge(b);
        }
        for (a, b) in self.entries_im.iter_mut().zip(&other.entries_im) {
            a.merge(b);
        }
        self.entropy.merge(&other.entropy);
        self.entropy_min = self.entropy_min.min(other.entropy_min);
        self.entropy_max = self.entropy_max.max(other.entropy_max);
        self.quantumness.merge(&other.quantumness);
        self.probe_variance.merge(&other.probe_variance);
    }
}

#[derive(Clone, Debug)]
struct Accumulator {
    times: Vec<f64>,
    checkpoints: Vec<CheckpointAccumulator>,
    n_trajectories: usize,
    max_total_repair: f64,
    flagged_trajectories: usize,
}

impl Accumulator {
    fn new(dim: usize, times: Vec<f64>) -> Self {
        Self {
            checkpoints: vec![CheckpointAccumulator::new(dim); times.len()],
            times,
            n_trajectories: 0,
            max_total_repair: 0.0,
            flagged_trajectories: 0,
        }
    }

    fn finish_trajectory(&mut self, total_repair: f64) {
        self.n_trajectories += 1;
        self.max_total_repair = self.max_total_repair.max(total_repair);
        if total_repair > REPAIR_FLAG_THRESHOLD {
            self.flagged_trajectories += 1;
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.checkpoints.iter_mut().zip(&other.checkpoints) {
            a.merge(b);
        }
        self.n_trajectories += other.n_trajectories;
        self.max_total_repair = self.max_total_repair.max(other.max_total_repair);
        self.flagged_trajectories += other.flagged_trajectories;
    }

    fn finish(self, obs: &Observables) -> Result<EnsembleStatistics> {
        let d = obs.dim;
        let mut stats = EnsembleStatistics {
            times: self.times,
            n_trajectories: self.n_trajectories,
            max_total_repair: self.max_total_repair,
            flagged_trajectories: self.flagged_trajectories,
            ..EnsembleStatistics::default()
        };
        for cp in &self.checkpoints {
            let mean = ComplexMatrix::from_fn(d, |i, j| {
                C64::new(cp.entries_re[i * d + j].mean, cp.entries_im[i * d + j].mean)
            });
            let se = ComplexMatrix::from_fn(d, |i, j| {
                C64::new(
                    cp.entries_re[i * d + j].standard_error(),
                    cp.entries_im[i * d + j].standard_error(),
                )
            });
            stats.mean_state.push(DensityMatrix::new(mean.hermitian_part())?);
            stats.state_se.push(se);
            stats.mean_entropy.push(cp.entropy.mean);
            stats.entropy_se.push(cp.entropy.standard_error());
            stats.entropy_min.push(cp.entropy_min);
            stats.entropy_max.push(cp.entropy_max);
            stats.quantumness_mean.push(cp.quantumness.mean);
            stats.quantumness_se.push(cp.quantumness.standard_error());
            if obs.probe.is_some() {
                stats.probe_variance_mean.push(cp.probe_variance.mean);
            }
        }
        Ok(stats)
    }
}

/// Checkpoint statistics of an ensemble of conditioned trajectories.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleStatistics {
    pub times: Vec<f64>,
    /// `E[ρ_t]`.
    pub mean_state: Vec<DensityMatrix>,
    /// Standard errors of the real and imaginary parts of each entry of `E[ρ_t]`.
    pub state_se: Vec<ComplexMatrix>,
    /// `E[S_t]`.
    pub mean_entropy: Vec<f64>,
    pub entropy_se: Vec<f64>,
    /// Smallest and largest single-trajectory entropy at each checkpoint.
    pub entropy_min: Vec<f64>,
    pub entropy_max: Vec<f64>,
    /// `E[⟨[M†, M]⟩]`.
    pub quantumness_mean: Vec<f64>,
    pub quantumness_se: Vec<f64>,
    /// `E[Var_L(ρ_t)]`, the per-trajectory variance averaged over the
    /// ensemble. Empty unless the probe is Hermitian.
    pub probe_variance_mean: Vec<f64>,
    pub n_trajectories: usize,
    pub max_total_repair: f64,
    pub flagged_trajectories: usize,
}

impl EnsembleStatistics {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Aggregates existing records in the given order.
    pub fn from_records(model: &ModelSpec, records: &[TrajectoryRecord], floor: f64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one trajectory record is required".into()))?;
        let obs = Observables::new(model, floor)?;
        let mut acc = Accumulator::new(model.dim(), first.times.clone());
        for (idx, rec) in records.iter().enumerate() {
            if rec.times != first.times {
                return Err(Error::InvalidParameter(format!(
                    "record {idx} has a different checkpoint grid"
                )));
            }
            for (cp, rho) in acc.checkpoints.iter_mut().zip(&rec.states) {
                model.check_state(rho)?;
                cp.push(&obs, rho, von_neumann_entropy_with_floor(rho, floor));
            }
            acc.finish_trajectory(rec.total_repair());
        }
        acc.finish(&obs)
    }

    /// Conservative standard error of the trace distance between `E[ρ_k]`
    /// and a fixed state: `½ √d ‖SE‖_F`.
    pub fn trace_distance_se(&self, k: usize) -> f64 {
        let se = &self.state_se[k];
        0.5 * (se.dim() as f64).sqrt() * se.frobenius_norm()
    }
}

fn run_block(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &EnsembleConfig,
    obs: &Observables,
    block: usize,
) -> Result<Accumulator> {
    let icfg = &cfg.integrator;
    let mut acc = Accumulator::new(model.dim(), icfg.checkpoint_times());
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(cfg.n_trajectories);
    for index in start..end {
        let mut rng = trajectory_rng(cfg.master_seed, index as u64);
        let mut total_repair = 0.0;
        let checkpoints = &mut acc.checkpoints;
        drive_trajectory(model, rho0, icfg, &mut rng, |cp| {
            let entropy = von_neumann_entropy_with_floor(&cp.state.rho, obs.floor);
            checkpoints[cp.index].push(obs, &cp.state.rho, entropy);
            total_repair += cp.repair;
        })
        .map_err(|e| e.in_trajectory(index))?;
        acc.finish_trajectory(total_repair);
    }
    Ok(acc)
}

/// Runs `n_trajectories` seeded trajectories on `worker_count` threads.
///
/// Output is bit-identical for a given `(master_seed, config)` whatever the
/// worker count.
pub fn run_ensemble(model: &ModelSpec, rho0: &DensityMatrix, cfg: &EnsembleConfig) -> Result<EnsembleStatistics> {
    cfg.validate()?;
    model.check_state(rho0)?;
    let obs = Observables::new(model, cfg.integrator.floor)?;
    let n_blocks = cfg.n_trajectories.div_ceil(BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let blocks: Vec<Result<Accumulator>> = pool.install(|| {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| run_block(model, rho0, cfg, &obs, b))
            .collect()
    });
    let mut total: Option<Accumulator> = None;
    for block in blocks {
        let block = block?;
        match total.as_mut() {
            None => total = Some(block),
            Some(acc) => acc.merge(&block),
        }
    }
    total.expect("at least one block").finish(&obs)
}

/// `(E[S(ρ_t)], S(E[ρ_t]))` per checkpoint.
pub fn mean_entropy_vs_entropy_of_mean(stats: &EnsembleStatistics) -> (Vec<f64>, Vec<f64>) {
    let entropy_of_mean = stats.mean_state.iter().map(von_neumann_entropy).collect();
    (stats.mean_entropy.clone(), entropy_of_mean)
}
