//! Simulation and analysis of measurement-based feedback dynamics.
//!
//! The crate integrates the stochastic master equation for a continuously
//! monitored system with a state-dependent Hamiltonian control, averages
//! trajectory ensembles, and evaluates the von Neumann entropy together with
//! the lower bound on its expected rate of change:
//!
//! ```text
//! dE[S_t]/dt >= E[<[M†, M]>] - 4 Var_L(E[rho_t])
//! ```
//!
//! Modules are layered bottom-up: [`linalg`] is the dense complex kernel,
//! [`dynamics`] holds the superoperators, [`integrator`] and [`ensemble`]
//! produce trajectories and their statistics, [`entropy`] evaluates the
//! entropy quantities and inequalities, and [`qubit`] packages the
//! two-level stabilization scenario with its closed-form results.

pub mod dynamics;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod qubit;
pub mod sampling;

pub use dynamics::{ControlLaw, ModelSpec};
pub use ensemble::{EnsembleConfig, EnsembleStatistics};
pub use entropy::EntropyBoundReport;
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, TrajectoryRecord, TrajectoryState};
pub use linalg::{ComplexMatrix, DensityMatrix, SpectralDecomposition, C64};
pub use qubit::{BlochVector, QubitScenario};
