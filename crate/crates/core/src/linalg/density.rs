use super::eigen::jacobi;
use super::{hermitian_eig, ComplexMatrix, SpectralDecomposition, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationTolerances {
    /// Bound on `max |ρ - ρ†|`.
    pub hermitian: f64,
    /// Smallest admissible eigenvalue is `-eigenvalue`.
    pub eigenvalue: f64,
    /// Bound on `|Tr ρ - 1|`.
    pub trace: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            eigenvalue: 1e-10,
            trace: 1e-10,
        }
    }
}

/// A validated quantum state: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, ValidationTolerances::default())
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: ValidationTolerances) -> Result<Self> {
        validate(&matrix, tol)?;
        Ok(Self { matrix })
    }

    /// Wraps a matrix that is physical by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(validate(&matrix, ValidationTolerances::default()).is_ok());
        Self { matrix }
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDensity("state vector must be non-zero and finite".into()));
        }
        Self::new(ComplexMatrix::outer(psi).scale_real(1.0 / norm))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(populations))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.matrix
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> SpectralDecomposition {
        jacobi(&self.matrix.hermitian_part())
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn validate(m: &ComplexMatrix, tol: ValidationTolerances) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let asym = m.max_asymmetry();
    if asym > tol.hermitian {
        return Err(Error::InvalidDensity(format!(
            "not Hermitian: max |ρ - ρ†| = {asym:.3e}"
        )));
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol.trace {
        return Err(Error::InvalidDensity(format!("trace {trace} differs from 1")));
    }
    let min_eig = jacobi(&m.hermitian_part()).min_eigenvalue();
    if min_eig < -tol.eigenvalue {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

/// `U · diag(ln max(λ_j, ε)) · U†`.
pub fn log_density(rho: &DensityMatrix, floor: f64) -> Result<ComplexMatrix> {
    check_floor(floor)?;
    Ok(rho.spectrum().map(|l| l.max(floor).ln()))
}

pub(crate) fn check_floor(floor: f64) -> Result<()> {
    if floor > 0.0 && floor.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eigenvalue floor must be positive, got {floor}"
        )))
    }
}

/// `½ ‖a - b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.matrix().check_same_dim(b.matrix())?;
    let diff = a.matrix() - b.matrix();
    let sd = hermitian_eig(&diff)?;
    Ok(0.5 * sd.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}
