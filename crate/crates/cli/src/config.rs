//! TOML run configuration.
//!
//! Every table rejects unknown keys. Complex matrices are flat row-major
//! lists of `[re, im]` pairs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use entroflux_core::dynamics::ControlLaw;
use entroflux_core::integrator::IntegratorConfig;
use entroflux_core::linalg::{ComplexMatrix, DensityMatrix, C64, DEFAULT_FLOOR};
use entroflux_core::qubit::{bloch_to_density, BlochVector, QubitScenario};
use entroflux_core::{EnsembleConfig, ModelSpec};
use serde::Deserialize;

use crate::error::CliError;

pub const WORKERS_ENV: &str = "ENTROFLUX_WORKERS";

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub initial_state: InitialStateConfig,
    pub ensemble: EnsembleSection,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_emit")]
    pub emit: BTreeSet<Emit>,
    #[serde(default)]
    pub report: ReportSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

fn default_emit() -> BTreeSet<Emit> {
    BTreeSet::from([Emit::Ensemble])
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Trajectories,
    Ensemble,
    BoundReport,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    Qubit {
        kappa: f64,
        alpha: f64,
        #[serde(default)]
        control: ControlConfig,
    },
    Explicit {
        dim: usize,
        hamiltonian: Vec<[f64; 2]>,
        probe: Vec<[f64; 2]>,
        decoherence: Vec<[f64; 2]>,
        #[serde(default)]
        control: ControlConfig,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    BlochXProportional {
        gain: f64,
    },
}

impl From<ControlConfig> for ControlLaw {
    fn from(c: ControlConfig) -> Self {
        match c {
            ControlConfig::Zero => ControlLaw::Zero,
            ControlConfig::Constant { value } => ControlLaw::Constant(value),
            ControlConfig::BlochXProportional { gain } => ControlLaw::BlochXProportional { gain },
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    Bloch { x: f64, y: f64, z: f64 },
    Matrix { dim: usize, entries: Vec<[f64; 2]> },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_trajectories: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub worker_count: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_repair_tolerance")]
    pub repair_tolerance: f64,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

fn default_repair_tolerance() -> f64 {
    IntegratorConfig::default().repair_tolerance
}

fn default_record_stride() -> usize {
    IntegratorConfig::default().record_stride
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Moving-average window applied to `E[S_t]` before differencing.
    #[serde(default)]
    pub smoothing_window: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Validated, ready-to-run configuration.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub model: ModelSpec,
    pub scenario: Option<QubitScenario>,
    pub initial_state: DensityMatrix,
    pub ensemble: EnsembleConfig,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Emit>,
    pub smoothing_window: usize,
    pub sweep_alphas: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn resolve(&self, overrides: &Overrides) -> Result<ResolvedRun, CliError> {
        let config_err = |e: entroflux_core::Error| CliError::Config(e.to_string());

        let (model, scenario) = match &self.scenario {
            ScenarioConfig::Qubit { kappa, alpha, control } => {
                let s = QubitScenario::new(*kappa, *alpha, (*control).into()).map_err(config_err)?;
                (s.model().map_err(config_err)?, Some(s))
            }
            ScenarioConfig::Explicit {
                dim,
                hamiltonian,
                probe,
                decoherence,
                control,
            } => {
                let h = matrix_from_pairs("hamiltonian", *dim, hamiltonian)?;
                let l = matrix_from_pairs("probe", *dim, probe)?;
                let m = matrix_from_pairs("decoherence", *dim, decoherence)?;
                (ModelSpec::new(h, l, m, (*control).into()).map_err(config_err)?, None)
            }
        };

        let initial_state = match &self.initial_state {
            InitialStateConfig::Bloch { x, y, z } => {
                if model.dim() != 2 {
                    return Err(CliError::Config("a Bloch initial state requires dim = 2".into()));
                }
                bloch_to_density(BlochVector::new(*x, *y, *z)).map_err(config_err)?
            }
            InitialStateConfig::Matrix { dim, entries } => {
                let m = matrix_from_pairs("initial_state", *dim, entries)?;
                DensityMatrix::new(m).map_err(config_err)?
            }
        };
        if initial_state.dim() != model.dim() {
            return Err(CliError::Config(format!(
                "initial state has dim {} but the model has dim {}",
                initial_state.dim(),
                model.dim()
            )));
        }

        let integrator = IntegratorConfig {
            dt: self.integrator.dt,
            t_final: self.integrator.t_final,
            floor: self.integrator.floor,
            repair_tolerance: self.integrator.repair_tolerance,
            record_stride: self.integrator.record_stride,
        };
        let worker_count = match overrides.workers.or(self.ensemble.worker_count) {
            Some(w) => w,
            None => workers_from_env()?,
        };
        let ensemble = EnsembleConfig {
            n_trajectories: self.ensemble.n_trajectories,
            master_seed: overrides.seed.unwrap_or(self.ensemble.master_seed),
            worker_count,
            integrator,
        };
        ensemble.validate().map_err(config_err)?;

        let output_dir = overrides
            .out
            .clone()
            .or_else(|| self.output_path.clone())
            .unwrap_or_else(|| PathBuf::from("entroflux-out"));

        Ok(ResolvedRun {
            model,
            scenario,
            initial_state,
            ensemble,
            output_dir,
            emit: self.emit.clone(),
            smoothing_window: self.report.smoothing_window,
            sweep_alphas: self.sweep.as_ref().map(|s| s.alphas.clone()),
        })
    }
}

fn workers_from_env() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn matrix_from_pairs(name: &str, dim: usize, pairs: &[[f64; 2]]) -> Result<ComplexMatrix, CliError> {
    if dim == 0 || pairs.len() != dim * dim {
        return Err(CliError::Config(format!(
            "{name}: expected {} [re, im] pairs for dim = {dim}, got {}",
            dim * dim,
            pairs.len()
        )));
    }
    ComplexMatrix::from_row_major(dim, pairs.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .map_err(|e| CliError::Config(format!("{name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUBIT: &str = r#"
        output_path = "out"
        emit = ["ensemble", "bound_report"]

        [scenario]
        kind = "qubit"
        kappa = 1.0
        alpha = 6.0

        [initial_state]
        kind = "bloch"
        x = 1.0
        y = 0.0
        z = 0.0

        [ensemble]
        n_trajectories = 10
        master_seed = 42
        worker_count = 2

        [integrator]
        dt = 1e-3
        t_final = 0.1
    "#;

    #[test]
    fn parses_qubit_config() {
        let cfg = RunConfig::from_toml(QUBIT).unwrap();
        let run = cfg.resolve(&Overrides::default()).unwrap();
        assert_eq!(run.ensemble.worker_count, 2);
        assert_eq!(run.ensemble.integrator.record_stride, 10);
        assert!(run.emit.contains(&Emit::BoundReport));
        assert_eq!(run.scenario.unwrap().alpha, 6.0);
        assert_eq!(run.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn overrides_take_precedence() {
        let cfg = RunConfig::from_toml(QUBIT).unwrap();
        let run = cfg
            .resolve(&Overrides {
                seed: Some(7),
                workers: Some(3),
                out: Some("elsewhere".into()),
            })
            .unwrap();
        assert_eq!(run.ensemble.master_seed, 7);
        assert_eq!(run.ensemble.worker_count, 3);
        assert_eq!(run.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = QUBIT.replace("alpha = 6.0", "alpha = 6.0\nbeta = 1.0");
        assert!(matches!(RunConfig::from_toml(&text), Err(CliError::Config(_))));
        let text = QUBIT.replace("master_seed = 42", "master_seed = 42\nseeds = 3");
        assert!(RunConfig::from_toml(&text).is_err());
        let text = format!("extra = 1\n{QUBIT}");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn non_positive_dt_is_a_config_error() {
        let text = QUBIT.replace("dt = 1e-3", "dt = 0.0");
        let err = RunConfig::from_toml(&text).unwrap().resolve(&Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("dt must be positive"), "{err}");
    }

    #[test]
    fn explicit_model_and_matrix_state() {
        let text = r#"
            [scenario]
            kind = "explicit"
            dim = 2
            hamiltonian = [[0, 0], [0, -1], [0, 1], [0, 0]]
            probe = [[1, 0], [0, 0], [0, 0], [-1, 0]]
            decoherence = [[0, 0], [0, 0], [1, 0], [0, 0]]
            control = { law = "constant", value = 0.3 }

            [initial_state]
            kind = "matrix"
            dim = 2
            entries = [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]

            [ensemble]
            n_trajectories = 1
            master_seed = 1

            [integrator]
            dt = 1e-2
            t_final = 1.0
            record_stride = 5
        "#;
        let run = RunConfig::from_toml(text).unwrap().resolve(&Overrides::default()).unwrap();
        assert!(run.scenario.is_none());
        assert_eq!(run.model.control(), ControlLaw::Constant(0.3));
        assert_eq!(run.initial_state, DensityMatrix::maximally_mixed(2));
    }

    #[test]
    fn malformed_matrices_rejected() {
        let text = r#"
            [scenario]
            kind = "explicit"
            dim = 2
            hamiltonian = [[0, 0], [0, -1], [0, 1]]
            probe = [[1, 0], [0, 0], [0, 0], [-1, 0]]
            decoherence = [[0, 0], [0, 0], [1, 0], [0, 0]]

            [initial_state]
            kind = "bloch"
            x = 0.0
            y = 0.0
            z = 2.0

            [ensemble]
            n_trajectories = 1
            master_seed = 1

            [integrator]
            dt = 1e-2
            t_final = 1.0
        "#;
        let err = RunConfig::from_toml(text).unwrap().resolve(&Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("hamiltonian"), "{err}");
    }
}
