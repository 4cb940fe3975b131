//! Seeded random operators and states for property sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix with standard normal real and imaginary parts.
pub fn random_matrix(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| gaussian(rng))
}

/// `(G + G†) / 2` for a Ginibre `G`.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_matrix(dim, rng).hermitian_part()
}

/// Haar-distributed unitary from the QR factorization of a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = random_matrix(dim, rng);
    // Modified Gram-Schmidt on the columns; the phases of R's diagonal are
    // absorbed into Q so the result is Haar distributed.
    let mut q = g.clone();
    for j in 0..dim {
        for k in 0..j {
            let mut proj = C64::new(0.0, 0.0);
            for i in 0..dim {
                proj += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..dim {
                let qik = q[(i, k)];
                q[(i, j)] -= proj * qik;
            }
        }
        let norm = (0..dim).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// Random state with spectrum bounded below by `min_eig`.
///
/// Eigenvalues are `min_eig + (1 - d·min_eig)·p` with `p` uniform on the
/// simplex, and eigenvectors are Haar random.
pub fn random_density_with(dim: usize, min_eig: f64, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {dim}")));
    }
    if !(0.0..1.0 / dim as f64).contains(&min_eig) {
        return Err(Error::InvalidParameter(format!(
            "min_eig {min_eig} infeasible for d = {dim}: need 0 <= min_eig < 1/d"
        )));
    }
    let weights: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    let spread = 1.0 - dim as f64 * min_eig;
    let eigenvalues: Vec<f64> = weights.iter().map(|w| min_eig + spread * w / total).collect();

    let u = random_unitary(dim, rng);
    let m = ComplexMatrix::from_fn(dim, |i, j| {
        (0..dim)
            .map(|k| u[(i, k)] * u[(j, k)].conj() * eigenvalues[k])
            .sum()
    });
    let m = m.hermitian_part();
    let trace = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / trace))
}

/// Deterministic [`random_density_with`] driven by a ChaCha8 stream.
pub fn random_density(dim: usize, min_eig: f64, seed: u64) -> Result<DensityMatrix> {
    random_density_with(dim, min_eig, &mut ChaCha8Rng::seed_from_u64(seed))
}
