//! Model definition and the superoperators of the conditioned dynamics
//!
//! ```text
//! dρ = -i[u(ρ) H, ρ] dt + D[L]ρ dt + D[M]ρ dt + H[L]ρ dW
//! ```
//!
//! with `D[A]ρ = AρA† - ½A†Aρ - ½ρA†A` and
//! `H[A]ρ = Aρ + ρA† - Tr[(A + A†)ρ] ρ`.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64, I};

const HAMILTONIAN_TOLERANCE: f64 = 1e-10;

/// Scalar feedback input `u(ρ)` multiplying the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ControlLaw {
    #[default]
    Zero,
    Constant(f64),
    /// `u = -gain · Tr(σ_x ρ)`; qubits only.
    BlochXProportional { gain: f64 },
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::Zero => "zero",
            ControlLaw::Constant(_) => "constant",
            ControlLaw::BlochXProportional { .. } => "bloch_x_proportional",
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            ControlLaw::BlochXProportional { .. } if dim != 2 => Err(Error::ControlDimension {
                law: self.name(),
                dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        self.check_dim(rho.dim())?;
        Ok(self.evaluate_unchecked(rho.matrix()))
    }

    /// `true` when `u` does not depend on the state.
    pub fn is_open_loop(&self) -> bool {
        !matches!(self, ControlLaw::BlochXProportional { .. })
    }

    #[inline]
    pub(crate) fn evaluate_unchecked(&self, rho: &ComplexMatrix) -> f64 {
        match *self {
            ControlLaw::Zero => 0.0,
            ControlLaw::Constant(u) => u,
            // Tr(σ_x ρ) = 2 Re ρ₀₁
            ControlLaw::BlochXProportional { gain } => -gain * 2.0 * rho[(0, 1)].re,
        }
    }
}

pub fn evaluate_control(law: &ControlLaw, rho: &DensityMatrix) -> Result<f64> {
    law.evaluate(rho)
}

/// Operators `(H, L, M)` and the control law.
///
/// `L` is the measured probe and `M` the unobserved decoherence channel;
/// neither needs to be Hermitian.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    hamiltonian: ComplexMatrix,
    probe: ComplexMatrix,
    decoherence: ComplexMatrix,
    control: ControlLaw,
    cache: OperatorCache,
}

#[derive(Clone, Debug)]
struct OperatorCache {
    probe_dag: ComplexMatrix,
    probe_dag_probe: ComplexMatrix,
    probe_sum: ComplexMatrix,
    decoherence_dag: ComplexMatrix,
    decoherence_dag_decoherence: ComplexMatrix,
}

impl ModelSpec {
    pub fn new(
        hamiltonian: ComplexMatrix,
        probe: ComplexMatrix,
        decoherence: ComplexMatrix,
        control: ControlLaw,
    ) -> Result<Self> {
        hamiltonian.check_same_dim(&probe)?;
        hamiltonian.check_same_dim(&decoherence)?;
        for op in [&hamiltonian, &probe, &decoherence] {
            if !op.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let asym = hamiltonian.max_asymmetry();
        if asym > HAMILTONIAN_TOLERANCE {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
                tolerance: HAMILTONIAN_TOLERANCE,
            });
        }
        if let ControlLaw::Constant(u) | ControlLaw::BlochXProportional { gain: u } = control {
            if !u.is_finite() {
                return Err(Error::InvalidParameter("control parameter must be finite".into()));
            }
        }
        control.check_dim(hamiltonian.dim())?;

        let probe_dag = probe.dagger();
        let decoherence_dag = decoherence.dagger();
        let cache = OperatorCache {
            probe_dag_probe: &probe_dag * &probe,
            probe_sum: &probe + &probe_dag,
            decoherence_dag_decoherence: &decoherence_dag * &decoherence,
            probe_dag,
            decoherence_dag,
        };
        Ok(Self {
            hamiltonian,
            probe,
            decoherence,
            control,
            cache,
        })
    }

    /// No dynamics at all: `H = L = M = 0`.
    pub fn frozen(dim: usize) -> Self {
        let z = ComplexMatrix::zeros(dim);
        Self::new(z.clone(), z.clone(), z, ControlLaw::Zero).expect("zero model is valid")
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn probe(&self) -> &ComplexMatrix {
        &self.probe
    }

    pub fn decoherence(&self) -> &ComplexMatrix {
        &self.decoherence
    }

    pub fn control(&self) -> ControlLaw {
        self.control
    }

    pub fn with_control(&self, control: ControlLaw) -> Result<Self> {
        Self::new(
            self.hamiltonian.clone(),
            self.probe.clone(),
            self.decoherence.clone(),
            control,
        )
    }

    pub(crate) fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        self.hamiltonian.check_same_dim(rho.matrix())
    }

    /// `-i[uH, ρ] + D[L]ρ + D[M]ρ` on an arbitrary (possibly unphysical) matrix.
    pub(crate) fn drift(&self, rho: &ComplexMatrix, u: f64) -> ComplexMatrix {
        let mut out = dissipator_with(&self.probe, &self.cache.probe_dag, &self.cache.probe_dag_probe, rho);
        out += &dissipator_with(
            &self.decoherence,
            &self.cache.decoherence_dag,
            &self.cache.decoherence_dag_decoherence,
            rho,
        );
        if u != 0.0 {
            let h_rho = &self.hamiltonian * rho;
            let rho_h = rho * &self.hamiltonian;
            out.add_scaled(-I * u, &(&h_rho - &rho_h));
        }
        out
    }

    /// `H[L]ρ`.
    pub(crate) fn backaction(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mean = self.cache.probe_sum.trace_product(rho).re;
        let mut out = &(&self.probe * rho) + &(rho * &self.cache.probe_dag);
        out.add_scaled(C64::new(-mean, 0.0), rho);
        out
    }

    /// `Tr[(L + L†)ρ]`, the predicted drift of the measurement record.
    pub(crate) fn record_mean(&self, rho: &ComplexMatrix) -> f64 {
        self.cache.probe_sum.trace_product(rho).re
    }
}

fn dissipator_with(
    a: &ComplexMatrix,
    a_dag: &ComplexMatrix,
    a_dag_a: &ComplexMatrix,
    rho: &ComplexMatrix,
) -> ComplexMatrix {
    let mut out = &(a * rho) * a_dag;
    out.add_scaled(C64::new(-0.5, 0.0), &(a_dag_a * rho));
    out.add_scaled(C64::new(-0.5, 0.0), &(rho * a_dag_a));
    out
}

/// `D[a]ρ = aρa† - ½a†aρ - ½ρa†a`.
pub fn dissipator(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    a.check_same_dim(rho.matrix())?;
    let a_dag = a.dagger();
    let a_dag_a = &a_dag * a;
    Ok(dissipator_with(a, &a_dag, &a_dag_a, rho.matrix()))
}

/// `H[a]ρ = aρ + ρa† - Tr[(a + a†)ρ] ρ`.
pub fn innovation(a: &ComplexMatrix, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    a.check_same_dim(rho.matrix())?;
    let rho = rho.matrix();
    let a_dag = a.dagger();
    let mean = (&a_dag + a).trace_product(rho).re;
    let mut out = &(a * rho) + &(rho * &a_dag);
    out.add_scaled(C64::new(-mean, 0.0), rho);
    Ok(out)
}

/// `Δρ = (-i[uH, ρ] + D[L]ρ + D[M]ρ) dt + H[L]ρ dW` with `u = u(ρ)`.
pub fn sme_increment(model: &ModelSpec, rho: &DensityMatrix, dt: f64, dw: f64) -> Result<ComplexMatrix> {
    model.check_state(rho)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    Ok(increment_unchecked(model, rho.matrix(), dt, dw))
}

pub(crate) fn increment_unchecked(model: &ModelSpec, rho: &ComplexMatrix, dt: f64, dw: f64) -> ComplexMatrix {
    let u = model.control.evaluate_unchecked(rho);
    let mut out = model.drift(rho, u).scale_real(dt);
    if dw != 0.0 {
        out.add_scaled(C64::new(dw, 0.0), &model.backaction(rho));
    }
    out
}

/// Right-hand side of the unconditional master equation for a fixed input
/// `u`; `None` evaluates the model's control law on `ρ`.
pub fn lindblad_rhs(model: &ModelSpec, rho: &DensityMatrix, u_override: Option<f64>) -> Result<ComplexMatrix> {
    model.check_state(rho)?;
    let u = match u_override {
        Some(u) => u,
        None => model.control.evaluate(rho)?,
    };
    Ok(model.drift(rho.matrix(), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::*;
    use crate::sampling::{random_density_with, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn qubit(h: ComplexMatrix, l: ComplexMatrix, m: ComplexMatrix) -> ModelSpec {
        ModelSpec::new(h, l, m, ControlLaw::Zero).unwrap()
    }

    fn bloch(x: f64, y: f64, z: f64) -> DensityMatrix {
        let m = &(&(&ComplexMatrix::identity(2) + &sigma_x().scale_real(x)) + &sigma_y().scale_real(y))
            + &sigma_z().scale_real(z);
        DensityMatrix::new(m.scale_real(0.5)).unwrap()
    }

    #[test]
    fn dissipator_examples() {
        let up = DensityMatrix::pure(&ket0()).unwrap();
        assert_eq!(dissipator(&sigma_z(), &up).unwrap().max_abs(), 0.0);

        let d = dissipator(&sigma_minus(), &up).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[-1.0, 1.0]);
        assert!(d.max_abs_diff(&expected) < 1e-15);

        let x = 0.4;
        let d = dissipator(&sigma_z(), &bloch(x, 0.0, 0.0)).unwrap();
        assert!(d.max_abs_diff(&sigma_x().scale_real(-x)) < 1e-15);
    }

    #[test]
    fn innovation_examples() {
        let up = DensityMatrix::pure(&ket0()).unwrap();
        assert_eq!(innovation(&sigma_z(), &up).unwrap().max_abs(), 0.0);
        let h = innovation(&sigma_z(), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(h.max_abs_diff(&sigma_z()) < 1e-15);
    }

    #[test]
    fn superoperators_preserve_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..1000 {
            let d = 2 + k % 3;
            let a = random_matrix(d, &mut rng);
            let rho = random_density_with(d, 0.0, &mut rng).unwrap();
            let dis = dissipator(&a, &rho).unwrap();
            let inn = innovation(&a, &rho).unwrap();
            assert!(dis.trace().norm() <= 1e-12);
            assert!(inn.trace().norm() <= 1e-12);
            assert!(dis.is_hermitian(1e-12));
            assert!(inn.is_hermitian(1e-12));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityMatrix::maximally_mixed(3);
        assert!(matches!(dissipator(&sigma_z(), &rho), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(innovation(&sigma_z(), &rho), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn control_laws() {
        let rho = DensityMatrix::pure(&ket_plus()).unwrap();
        assert_eq!(ControlLaw::Zero.evaluate(&rho).unwrap(), 0.0);
        assert_eq!(ControlLaw::Constant(0.3).evaluate(&rho).unwrap(), 0.3);
        let u = ControlLaw::BlochXProportional { gain: 2.0 }.evaluate(&rho).unwrap();
        assert!((u + 2.0).abs() < 1e-15);
        let qutrit = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            ControlLaw::BlochXProportional { gain: 1.0 }.evaluate(&qutrit),
            Err(Error::ControlDimension { dim: 3, .. })
        ));
    }

    #[test]
    fn model_validation() {
        let z = ComplexMatrix::zeros(2);
        assert!(ModelSpec::new(sigma_minus(), z.clone(), z.clone(), ControlLaw::Zero).is_err());
        assert!(ModelSpec::new(z.clone(), ComplexMatrix::zeros(3), z.clone(), ControlLaw::Zero).is_err());
        let z3 = ComplexMatrix::zeros(3);
        assert!(ModelSpec::new(z3.clone(), z3.clone(), z3, ControlLaw::BlochXProportional { gain: 1.0 }).is_err());
        // non-Hermitian probe and decoherence are allowed
        assert!(ModelSpec::new(sigma_y(), sigma_minus(), sigma_plus(), ControlLaw::Zero).is_ok());
    }

    #[test]
    fn sme_increment_vanishes_at_probe_eigenstate() {
        let model = qubit(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let up = DensityMatrix::pure(&ket0()).unwrap();
        for (dt, dw) in [(1e-3, 0.3), (0.1, -2.0)] {
            assert_eq!(sme_increment(&model, &up, dt, dw).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn sme_increment_at_maximally_mixed() {
        let model = qubit(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let inc = sme_increment(&model, &DensityMatrix::maximally_mixed(2), 0.01, 0.1).unwrap();
        assert!(inc.max_abs_diff(&sigma_z().scale_real(0.1)) < 1e-15);
        assert!(sme_increment(&model, &DensityMatrix::maximally_mixed(2), 0.0, 0.1).is_err());
    }

    #[test]
    fn sme_increment_is_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = ModelSpec::new(sigma_y(), sigma_minus(), sigma_x(), ControlLaw::BlochXProportional { gain: 1.5 })
            .unwrap();
        for _ in 0..200 {
            let rho = random_density_with(2, 0.0, &mut rng).unwrap();
            let inc = sme_increment(&model, &rho, 1e-2, 0.3).unwrap();
            assert!(inc.trace().norm() <= 1e-12);
        }
    }

    #[test]
    fn lindblad_rhs_analytic_rates() {
        let x = 0.7;
        let dephasing = qubit(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let rhs = lindblad_rhs(&dephasing, &bloch(x, 0.0, 0.0), None).unwrap();
        // dρ/dt = (dx/dt) σ_x / 2 with dx/dt = -2x
        assert!(rhs.max_abs_diff(&sigma_x().scale_real(-x)) < 1e-15);

        let z = 0.3;
        let decay = qubit(sigma_y(), ComplexMatrix::zeros(2), sigma_minus());
        let rhs = lindblad_rhs(&decay, &bloch(0.0, 0.0, z), None).unwrap();
        assert!(rhs.max_abs_diff(&sigma_z().scale_real(-(1.0 + z) / 2.0)) < 1e-15);

        let ground = DensityMatrix::pure(&ket1()).unwrap();
        assert_eq!(lindblad_rhs(&decay, &ground, None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lindblad_rhs_is_linear_for_fixed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=4 {
            let model = ModelSpec::new(
                crate::sampling::random_hermitian(d, &mut rng),
                random_matrix(d, &mut rng),
                random_matrix(d, &mut rng),
                ControlLaw::Constant(0.7),
            )
            .unwrap();
            let r1 = random_density_with(d, 0.0, &mut rng).unwrap();
            let r2 = random_density_with(d, 0.0, &mut rng).unwrap();
            let alpha = 0.35;
            let mix = &r1.matrix().scale_real(alpha) + &r2.matrix().scale_real(1.0 - alpha);
            let mix = DensityMatrix::new(mix).unwrap();
            let lhs = lindblad_rhs(&model, &mix, None).unwrap();
            let rhs = &lindblad_rhs(&model, &r1, None).unwrap().scale_real(alpha)
                + &lindblad_rhs(&model, &r2, None).unwrap().scale_real(1.0 - alpha);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn averaged_increment_matches_master_equation() {
        let model = qubit(sigma_y(), sigma_z().scale_real(0.8), sigma_minus().scale_real(0.6));
        let rho = bloch(0.5, -0.2, 0.3);
        let dt: f64 = 1e-2;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, dt.sqrt()).unwrap();
        let mut sum = ComplexMatrix::zeros(2);
        let mut sum_sq = [0.0f64; 4];
        for _ in 0..n {
            let inc = sme_increment(&model, &rho, dt, normal.sample(&mut rng)).unwrap();
            for (k, z) in inc.as_slice().iter().enumerate() {
                sum_sq[k] += z.re * z.re + z.im * z.im;
            }
            sum += &inc;
        }
        let mean = sum.scale_real(1.0 / n as f64);
        let expected = lindblad_rhs(&model, &rho, None).unwrap().scale_real(dt);
        for (k, &sq) in sum_sq.iter().enumerate() {
            let m = mean.as_slice()[k];
            let var = sq / n as f64 - m.norm_sqr();
            let se = (var / n as f64).sqrt();
            assert!((m - expected.as_slice()[k]).norm() <= 4.0 * se + 1e-15, "entry {k}");
        }
    }
}
