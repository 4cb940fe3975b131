//! Shared fixtures for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use entroflux_core::ensemble::run_ensemble;
use entroflux_core::integrator::{integrate_me, IntegratorConfig};
use entroflux_core::linalg::DensityMatrix;
use entroflux_core::qubit::{bloch_to_density, BlochVector, QubitScenario};
use entroflux_core::sampling::random_density_with;
use entroflux_core::{ControlLaw, EnsembleConfig, EnsembleStatistics, ModelSpec, TrajectoryRecord};
use rand_chacha::ChaCha8Rng;

pub const DIMS: [usize; 3] = [2, 3, 4];

/// Writes one verdict line straight to stderr, so it shows even when the
/// test passes, then asserts it.
pub fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance criterion {criterion}: {verdict}: {detail}");
    assert!(pass, "criterion {criterion}: {detail}");
}

/// Random state with every eigenvalue at least `1e-3 / dim`.
pub fn full_rank(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    random_density_with(dim, 1e-3 / dim as f64, rng).expect("valid sampling parameters")
}

pub struct QubitRun {
    pub alpha: f64,
    pub model: ModelSpec,
    pub stats: EnsembleStatistics,
    /// RK4 master-equation solution on the same checkpoints.
    pub me: TrajectoryRecord,
    pub elapsed: Duration,
}

/// κ = 1, N = 5000, dt = 1e-3, T = 3, checkpoints every 10 steps, seed 42.
pub fn qubit_config(workers: usize) -> EnsembleConfig {
    EnsembleConfig {
        n_trajectories: 5000,
        master_seed: 42,
        worker_count: workers,
        integrator: IntegratorConfig {
            dt: 1e-3,
            t_final: 3.0,
            record_stride: 10,
            ..IntegratorConfig::default()
        },
    }
}

/// Open-loop qubit ensembles for α = 0, 6 and 2 from |+⟩⟨+| at 4 workers,
/// computed once per test process.
pub fn qubit_runs() -> &'static [QubitRun] {
    static RUNS: OnceLock<Vec<QubitRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let rho0 = bloch_to_density(BlochVector::new(1.0, 0.0, 0.0)).expect("|+> is a state");
        let cfg = qubit_config(4);
        [0.0, 6.0, 2.0]
            .into_iter()
            .map(|alpha| {
                let model = QubitScenario::new(1.0, alpha, ControlLaw::Zero)
                    .and_then(|s| s.model())
                    .expect("valid scenario");
                let start = Instant::now();
                let stats = run_ensemble(&model, &rho0, &cfg).expect("ensemble runs");
                let elapsed = start.elapsed();
                let me = integrate_me(&model, &rho0, &cfg.integrator, 0.0).expect("master equation integrates");
                QubitRun { alpha, model, stats, me, elapsed }
            })
            .collect()
    })
}
