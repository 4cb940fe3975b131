use super::{ComplexMatrix, C64, EIG_HERMITIAN_TOLERANCE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and the unitary whose columns are the matching
/// eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U · diag(f(λ)) · U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let d = self.dim();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(d, |i, j| {
            let mut acc = ZERO;
            for k in 0..d {
                acc += u[(i, k)] * u[(j, k)].conj() * fl[k];
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Diagonalizes a Hermitian matrix.
///
/// Rejects inputs with `max |m - m†| > 1e-8`; accepted inputs are
/// symmetrized before the sweep.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let asym = m.max_asymmetry();
    if asym > EIG_HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
            tolerance: EIG_HERMITIAN_TOLERANCE,
        });
    }
    Ok(jacobi(&m.hermitian_part()))
}

/// Cyclic complex Jacobi. Each rotation is a phase change on column `q`
/// that makes `a_pq` real, followed by a real Givens rotation.
pub(crate) fn jacobi(m: &ComplexMatrix) -> SpectralDecomposition {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)].norm_sqr())
                .sum();
            if off.sqrt() <= 1e-2 * f64::EPSILON * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 || !r.is_normal() {
        return;
    }
    let n = a.dim();
    let phase = apq / r;
    let phase_conj = phase.conj();

    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on rows/cols (p, q).
    let jqp = -phase_conj * s;
    let jqq = phase_conj * c;
    let column_update = |m: &mut ComplexMatrix| {
        for k in 0..n {
            let mkp = m[(k, p)];
            let mkq = m[(k, q)];
            m[(k, p)] = mkp * c + mkq * jqp;
            m[(k, q)] = mkp * s + mkq * jqq;
        }
    };
    column_update(a);
    column_update(v);
    for k in 0..n {
        let bpk = a[(p, k)];
        let bqk = a[(q, k)];
        a[(p, k)] = bpk * c + bqk * jqp.conj();
        a[(q, k)] = bpk * s + bqk * jqq.conj();
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::super::pauli::*;
    use super::*;
    use crate::sampling::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitarity_error(u: &ComplexMatrix) -> f64 {
        (&u.dagger() * u).max_abs_diff(&ComplexMatrix::identity(u.dim()))
    }

    #[test]
    fn pauli_z_spectrum() {
        let sd = hermitian_eig(&sigma_z()).unwrap();
        assert_eq!(sd.eigenvalues, vec![1.0, -1.0]);
    }

    #[test]
    fn degenerate_identity_spectrum() {
        let sd = hermitian_eig(&ComplexMatrix::identity(2).scale_real(0.5)).unwrap();
        assert_eq!(sd.eigenvalues, vec![0.5, 0.5]);
        assert!(unitarity_error(&sd.eigenvectors) < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_hermitian(4, &mut rng);
            let sd = hermitian_eig(&m).unwrap();
            assert!(sd.reconstruct().max_abs_diff(&m) <= 1e-12);
            assert!(unitarity_error(&sd.eigenvectors) <= 1e-12);
            assert!(sd.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian_with_asymmetry() {
        match hermitian_eig(&sigma_minus()) {
            Err(Error::NotHermitian { max_asymmetry, .. }) => assert!((max_asymmetry - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_is_handled() {
        let sd = hermitian_eig(&ComplexMatrix::zeros(3)).unwrap();
        assert_eq!(sd.eigenvalues, vec![0.0; 3]);
    }
}
