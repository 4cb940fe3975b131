//! Two-level stabilization scenario.
//!
//! `H = σ_y`, `L = √κ σ_z`, `M = √γ σ_−` with `γ = ακ`. Basis convention:
//! `|0⟩ = (1, 0)ᵀ` is the excited state, `σ_z = |0⟩⟨0| − |1⟩⟨1|` and
//! `σ_− = |1⟩⟨0|`.
//!
//! For this model the bound reads `γz − 4κ(1 − z²) ≥ 0` in terms of the
//! mean Bloch component `z`, i.e. `z ≥ (−α + √(64 + α²))/8`.

use crate::dynamics::{ControlLaw, ModelSpec};
use crate::entropy::sufficient_condition;
use crate::error::{Error, Result};
use crate::linalg::pauli::{sigma_minus, sigma_x, sigma_y, sigma_z};
use crate::linalg::{ComplexMatrix, DensityMatrix};

const BLOCH_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// `(I + xσ_x + yσ_y + zσ_z) / 2`.
pub fn bloch_to_density(b: BlochVector) -> Result<DensityMatrix> {
    let norm = b.norm();
    if !norm.is_finite() || norm * norm > 1.0 + BLOCH_NORM_TOLERANCE {
        return Err(Error::InvalidBloch { norm });
    }
    let m = &(&(&ComplexMatrix::identity(2) + &sigma_x().scale_real(b.x)) + &sigma_y().scale_real(b.y))
        + &sigma_z().scale_real(b.z);
    DensityMatrix::new(m.scale_real(0.5))
}

/// `(Tr σ_xρ, Tr σ_yρ, Tr σ_zρ)`.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok(BlochVector {
        x: sigma_x().trace_product(m).re,
        y: sigma_y().trace_product(m).re,
        z: sigma_z().trace_product(m).re,
    })
}

/// Measurement rate `κ`, decoherence ratio `α = γ/κ` and the feedback law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitScenario {
    pub kappa: f64,
    pub alpha: f64,
    pub control: ControlLaw,
}

impl QubitScenario {
    pub fn new(kappa: f64, alpha: f64, control: ControlLaw) -> Result<Self> {
        let s = Self { kappa, alpha, control };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be non-negative, got {}", self.kappa)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.alpha * self.kappa
    }

    /// `(H, L, M) = (σ_y, √κ σ_z, √γ σ_−)`.
    pub fn model(&self) -> Result<ModelSpec> {
        self.validate()?;
        ModelSpec::new(
            sigma_y(),
            sigma_z().scale_real(self.kappa.sqrt()),
            sigma_minus().scale_real(self.gamma().sqrt()),
            self.control,
        )
    }
}

/// Smallest mean `z` for which the bound is non-negative:
/// the root of `4z² + αz − 4 = 0` in `(0, 1]`.
pub fn z_threshold(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be non-negative, got {alpha}")));
    }
    if alpha.is_infinite() {
        return Ok(0.0);
    }
    // (−α + √(64 + α²))/8 cancels catastrophically for large α; the
    // rationalized form 8/(α + √(64 + α²)) is the same number.
    Ok(8.0 / (alpha + alpha.hypot(8.0)))
}

/// Bloch `x` under pure dephasing: `x₀ e^{−2κt}`.
pub fn dephasing_oracle(x0: f64, kappa: f64, t: f64) -> f64 {
    x0 * (-2.0 * kappa * t).exp()
}

/// Bloch `z` under spontaneous emission: `−1 + (z₀ + 1) e^{−γt}`.
pub fn decay_oracle(z0: f64, gamma: f64, t: f64) -> f64 {
    -1.0 + (z0 + 1.0) * (-gamma * t).exp()
}

/// Whether the sign test of the bound on `diag((1+z)/2, (1−z)/2)` agrees
/// with `z ≥ z_threshold(α)`.
pub fn threshold_consistency(scenario: &QubitScenario, z: f64) -> Result<bool> {
    if scenario.kappa.is_nan() || scenario.kappa <= 0.0 {
        return Err(Error::InvalidParameter("kappa must be positive".into()));
    }
    let rho = bloch_to_density(BlochVector::new(0.0, 0.0, z))?;
    let sufficient = sufficient_condition(&scenario.model()?, &rho)?;
    Ok(sufficient == (z >= z_threshold(scenario.alpha)?))
}
