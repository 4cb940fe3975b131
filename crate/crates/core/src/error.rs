use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian: max |m - m†| = {max_asymmetry:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("probe operator must be Hermitian for variance and bound evaluation (max |L - L†| = {max_asymmetry:.3e})")]
    NonHermitianProbe { max_asymmetry: f64 },

    #[error("control law `{law}` requires a qubit (d = 2), got d = {dim}")]
    ControlDimension { law: &'static str, dim: usize },

    #[error("physicality repair of {magnitude:.3e} exceeds tolerance {tolerance:.1e}")]
    RepairExceeded { magnitude: f64, tolerance: f64 },

    #[error("integration failed at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory {trajectory} failed: {source}")]
    Trajectory {
        trajectory: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Bloch vector norm {norm} exceeds 1")]
    InvalidBloch { norm: f64 },

    #[error("need at least {required} checkpoints, got {got}")]
    TooFewCheckpoints { required: usize, got: usize },

    #[error("{0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_trajectory(self, trajectory: usize) -> Self {
        Error::Trajectory {
            trajectory,
            source: Box::new(self),
        }
    }
}
