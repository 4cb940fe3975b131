//! Time stepping of the conditioned and unconditional dynamics.
//!
//! Conditioned trajectories use Euler–Maruyama followed by a physicality
//! repair (eigenvalue clipping and trace renormalization). The unconditional
//! master equation is integrated with classical RK4, and
//! [`propagate_me`] offers an exact matrix-exponential propagator for
//! stiff rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{increment_unchecked, ModelSpec};
use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, DensityMatrix, C64, DEFAULT_FLOOR, ONE, ZERO};

/// Accumulated repair above which a trajectory is flagged.
pub const REPAIR_FLAG_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Eigenvalue floor for logarithms.
    pub floor: f64,
    /// Largest clipped eigenvalue mass accepted in a single repair.
    pub repair_tolerance: f64,
    /// Record every `record_stride` steps.
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 3.0,
            floor: DEFAULT_FLOOR,
            repair_tolerance: 0.05,
            record_stride: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be at least dt".into()));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(Error::InvalidParameter("floor must lie in (0, 1)".into()));
        }
        if self.repair_tolerance.is_nan() || self.repair_tolerance < 0.0 {
            return Err(Error::InvalidParameter("repair_tolerance must be non-negative".into()));
        }
        if self.record_stride < 1 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Step indices that are recorded.
    pub fn checkpoint_steps(&self) -> impl Iterator<Item = usize> {
        (0..=self.n_steps()).step_by(self.record_stride)
    }

    pub fn n_checkpoints(&self) -> usize {
        self.n_steps() / self.record_stride + 1
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        self.checkpoint_steps().map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub rho: DensityMatrix,
    /// Accumulated Wiener path `W_t`.
    pub w: f64,
    /// Accumulated measurement record `y_t`.
    pub y: f64,
}

impl TrajectoryState {
    pub fn initial(rho: DensityMatrix) -> Self {
        Self {
            t: 0.0,
            rho,
            w: 0.0,
            y: 0.0,
        }
    }
}

/// Per-step diagnostics returned alongside the new state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub dw: f64,
    pub repair: f64,
}

/// Checkpoint series of one run. `dw_draws` and `repair_magnitudes` hold the
/// sums over the steps since the previous checkpoint (zero at `t = 0`).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub entropies: Vec<f64>,
    pub dw_draws: Vec<f64>,
    pub repair_magnitudes: Vec<f64>,
    pub measurement: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_repair(&self) -> f64 {
        self.repair_magnitudes.iter().sum()
    }

    pub fn repair_flagged(&self) -> bool {
        self.total_repair() > REPAIR_FLAG_THRESHOLD
    }

    fn push(&mut self, state: &TrajectoryState, entropy: f64, dw: f64, repair: f64) {
        self.times.push(state.t);
        self.states.push(state.rho.clone());
        self.entropies.push(entropy);
        self.dw_draws.push(dw);
        self.repair_magnitudes.push(repair);
        self.measurement.push(state.y);
    }
}

/// Draw from `N(0, dt)`.
pub fn wiener_increment(rng: &mut impl Rng, dt: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * dt.sqrt()
}

/// Generator for trajectory `index` of an ensemble seeded with
/// `master_seed`. ChaCha streams are independent, so each trajectory's
/// noise is fixed regardless of scheduling.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Symmetrizes, clips negative eigenvalues and renormalizes the trace.
/// Returns the state together with the clipped mass `Σ max(-λ_j, 0)`.
pub fn project_to_physical(m: &ComplexMatrix, tolerance: f64) -> Result<(DensityMatrix, f64)> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let asym = m.max_asymmetry();
    if asym > crate::linalg::EIG_HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
            tolerance: crate::linalg::EIG_HERMITIAN_TOLERANCE,
        });
    }
    let herm = m.hermitian_part();
    if is_positive_definite(&herm) {
        let trace = herm.trace().re;
        return Ok((DensityMatrix::from_trusted(herm.scale_real(1.0 / trace)), 0.0));
    }
    let sd = hermitian_eig(&herm)?;
    let clipped: f64 = sd.eigenvalues.iter().map(|&l| (-l).max(0.0)).sum();
    if clipped > tolerance {
        return Err(Error::RepairExceeded {
            magnitude: clipped,
            tolerance,
        });
    }
    let kept: f64 = sd.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if kept.is_nan() || kept <= 0.0 {
        return Err(Error::InvalidDensity("no positive spectral weight left after clipping".into()));
    }
    let repaired = sd.map(|l| l.max(0.0) / kept).hermitian_part();
    Ok((DensityMatrix::from_trusted(repaired), clipped))
}

/// Cholesky attempt on a Hermitian matrix.
fn is_positive_definite(m: &ComplexMatrix) -> bool {
    let d = m.dim();
    let mut l = vec![ZERO; d * d];
    for j in 0..d {
        let mut diag = m[(j, j)].re;
        for k in 0..j {
            diag -= l[j * d + k].norm_sqr();
        }
        if diag.is_nan() || diag <= 0.0 {
            return false;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = C64::new(ljj, 0.0);
        for i in j + 1..d {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k].conj();
            }
            l[i * d + j] = s / ljj;
        }
    }
    true
}

/// One Euler–Maruyama step with a prescribed Wiener increment.
pub fn em_step_with_increment(
    model: &ModelSpec,
    state: &TrajectoryState,
    cfg: &IntegratorConfig,
    dw: f64,
) -> Result<(TrajectoryState, StepInfo)> {
    model.check_state(&state.rho)?;
    let rho = state.rho.matrix();
    let record_mean = model.record_mean(rho);
    let mut next = increment_unchecked(model, rho, cfg.dt, dw);
    next += rho;
    let (rho_next, repair) = project_to_physical(&next, cfg.repair_tolerance)?;
    Ok((
        TrajectoryState {
            t: state.t + cfg.dt,
            rho: rho_next,
            w: state.w + dw,
            y: state.y + record_mean * cfg.dt + dw,
        },
        StepInfo { dw, repair },
    ))
}

/// One Euler–Maruyama step drawing `dW ~ N(0, dt)` from `rng`.
pub fn em_step(
    model: &ModelSpec,
    state: &TrajectoryState,
    cfg: &IntegratorConfig,
    rng: &mut impl Rng,
) -> Result<(TrajectoryState, StepInfo)> {
    let dw = wiener_increment(rng, cfg.dt);
    em_step_with_increment(model, state, cfg, dw)
}

/// What a trajectory driver hands to its observer at each checkpoint.
pub(crate) struct Checkpoint<'a> {
    pub index: usize,
    pub state: &'a TrajectoryState,
    pub dw: f64,
    pub repair: f64,
}

pub(crate) fn drive_trajectory(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    rng: &mut impl Rng,
    mut observe: impl FnMut(Checkpoint<'_>),
) -> Result<()> {
    cfg.validate()?;
    model.check_state(rho0)?;
    let n_steps = cfg.n_steps();
    let mut state = TrajectoryState::initial(rho0.clone());
    let (mut dw_acc, mut repair_acc) = (0.0, 0.0);
    observe(Checkpoint {
        index: 0,
        state: &state,
        dw: 0.0,
        repair: 0.0,
    });
    for step in 1..=n_steps {
        let (mut next, info) = em_step(model, &state, cfg, rng).map_err(|e| e.at_step(step))?;
        next.t = step as f64 * cfg.dt;
        state = next;
        dw_acc += info.dw;
        repair_acc += info.repair;
        if step % cfg.record_stride == 0 {
            observe(Checkpoint {
                index: step / cfg.record_stride,
                state: &state,
                dw: dw_acc,
                repair: repair_acc,
            });
            dw_acc = 0.0;
            repair_acc = 0.0;
        }
    }
    Ok(())
}

/// Conditioned trajectory driven by an explicit generator.
pub fn simulate_trajectory_with_rng(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    rng: &mut impl Rng,
) -> Result<TrajectoryRecord> {
    let mut record = TrajectoryRecord::default();
    let mut entropy_err = None;
    drive_trajectory(model, rho0, cfg, rng, |cp| {
        let entropy = von_neumann_entropy(&cp.state.rho);
        if !(entropy.is_finite()) && entropy_err.is_none() {
            entropy_err = Some(Error::NonFinite.at_step(cp.index * cfg.record_stride));
        }
        record.push(cp.state, entropy, cp.dw, cp.repair);
    })?;
    match entropy_err {
        Some(e) => Err(e),
        None => Ok(record),
    }
}

/// Conditioned trajectory; identical to trajectory 0 of an ensemble with
/// master seed `seed`.
pub fn simulate_trajectory(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    seed: u64,
) -> Result<TrajectoryRecord> {
    simulate_trajectory_with_rng(model, rho0, cfg, &mut trajectory_rng(seed, 0))
}

/// RK4 integration of the unconditional master equation at fixed input
/// `u_fixed`.
pub fn integrate_me(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    u_fixed: f64,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    model.check_state(rho0)?;
    let dt = cfg.dt;
    let mut rho = rho0.matrix().clone();
    let mut record = TrajectoryRecord::default();
    let record_state = |step: usize, rho: &ComplexMatrix, record: &mut TrajectoryRecord| -> Result<()> {
        let (state, repair) = project_to_physical(rho, cfg.repair_tolerance).map_err(|e| e.at_step(step))?;
        let entropy = von_neumann_entropy(&state);
        let ts = TrajectoryState {
            t: step as f64 * dt,
            rho: state,
            w: 0.0,
            y: 0.0,
        };
        record.push(&ts, entropy, 0.0, repair);
        Ok(())
    };
    record_state(0, &rho, &mut record)?;
    for step in 1..=cfg.n_steps() {
        let k1 = model.drift(&rho, u_fixed);
        let k2 = model.drift(&axpy(&rho, 0.5 * dt, &k1), u_fixed);
        let k3 = model.drift(&axpy(&rho, 0.5 * dt, &k2), u_fixed);
        let k4 = model.drift(&axpy(&rho, dt, &k3), u_fixed);
        rho.add_scaled(C64::new(dt / 6.0, 0.0), &k1);
        rho.add_scaled(C64::new(dt / 3.0, 0.0), &k2);
        rho.add_scaled(C64::new(dt / 3.0, 0.0), &k3);
        rho.add_scaled(C64::new(dt / 6.0, 0.0), &k4);
        if !rho.is_finite() {
            return Err(Error::NonFinite.at_step(step));
        }
        if step % cfg.record_stride == 0 {
            record_state(step, &rho, &mut record)?;
        }
    }
    Ok(record)
}

fn axpy(x: &ComplexMatrix, a: f64, y: &ComplexMatrix) -> ComplexMatrix {
    let mut out = x.clone();
    out.add_scaled(C64::new(a, 0.0), y);
    out
}

/// Matrix of the linear map `ρ ↦ -i[uH, ρ] + D[L]ρ + D[M]ρ` acting on
/// row-major vectorized `ρ`.
pub fn liouvillian(model: &ModelSpec, u: f64) -> ComplexMatrix {
    let d = model.dim();
    let mut g = ComplexMatrix::zeros(d * d);
    for col in 0..d * d {
        let mut basis = ComplexMatrix::zeros(d);
        basis[(col / d, col % d)] = ONE;
        let image = model.drift(&basis, u);
        for (row, &z) in image.as_slice().iter().enumerate() {
            g[(row, col)] = z;
        }
    }
    g
}

/// `exp(a)` by scaling and squaring with a degree-18 Taylor polynomial.
pub(crate) fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=18 {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Unconditional master-equation solution at the checkpoints of `cfg`,
/// propagated exactly with `exp(G · stride · dt)`. Stable for arbitrarily
/// stiff rates.
pub fn propagate_me(
    model: &ModelSpec,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    u_fixed: f64,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    model.check_state(rho0)?;
    let d = model.dim();
    let h = cfg.dt * cfg.record_stride as f64;
    let step = expm(&liouvillian(model, u_fixed).scale_real(h));
    let mut vec: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut record = TrajectoryRecord::default();
    for (k, step_index) in cfg.checkpoint_steps().enumerate() {
        if k > 0 {
            vec = (0..d * d)
                .map(|i| (0..d * d).map(|j| step[(i, j)] * vec[j]).sum())
                .collect();
        }
        let m = ComplexMatrix::from_row_major(d, vec.clone()).map_err(|e| e.at_step(step_index))?;
        let (state, repair) = project_to_physical(&m, cfg.repair_tolerance).map_err(|e| e.at_step(step_index))?;
        let ts = TrajectoryState {
            t: step_index as f64 * cfg.dt,
            rho: state,
            w: 0.0,
            y: 0.0,
        };
        let entropy = von_neumann_entropy(&ts.rho);
        record.push(&ts, entropy, 0.0, repair);
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ControlLaw;
    use crate::linalg::pauli::*;

    fn model(h: ComplexMatrix, l: ComplexMatrix, m: ComplexMatrix) -> ModelSpec {
        ModelSpec::new(h, l, m, ControlLaw::Zero).unwrap()
    }

    fn bloch_x(rho: &DensityMatrix) -> f64 {
        2.0 * rho.matrix()[(0, 1)].re
    }

    fn bloch_z(rho: &DensityMatrix) -> f64 {
        (rho.matrix()[(0, 0)] - rho.matrix()[(1, 1)]).re
    }

    fn cfg(dt: f64, t_final: f64, stride: usize) -> IntegratorConfig {
        IntegratorConfig {
            dt,
            t_final,
            record_stride: stride,
            ..IntegratorConfig::default()
        }
    }

    #[test]
    fn wiener_increments_have_zero_mean_and_variance_dt() {
        let dt = 1e-3;
        let n = 100_000;
        let mut rng = trajectory_rng(1, 0);
        let draws: Vec<f64> = (0..n).map(|_| wiener_increment(&mut rng, dt)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 4.0 * (dt / n as f64).sqrt());
        assert!((var - dt).abs() <= 0.05 * dt);

        let mut again = trajectory_rng(1, 0);
        let repeat: Vec<f64> = (0..n).map(|_| wiener_increment(&mut again, dt)).collect();
        assert_eq!(draws, repeat);
    }

    #[test]
    fn projection_examples() {
        let rho = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let (out, mag) = project_to_physical(rho.matrix(), 1e-6).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert_eq!(mag, 0.0);

        let (out, mag) = project_to_physical(&ComplexMatrix::from_real_diagonal(&[1.1, -0.1]), 0.5).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-15);
        assert!((mag - 0.1).abs() < 1e-15);

        let (out, mag) = project_to_physical(&ComplexMatrix::from_real_diagonal(&[0.6, 0.6]), 0.0).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.5, 0.5])) < 1e-15);
        assert_eq!(mag, 0.0);
    }

    #[test]
    fn projection_reports_excess_repair() {
        let err = project_to_physical(&ComplexMatrix::from_real_diagonal(&[1.1, -0.1]), 0.01).unwrap_err();
        assert!(matches!(err, Error::RepairExceeded { magnitude, .. } if (magnitude - 0.1).abs() < 1e-15));
    }

    #[test]
    fn projection_keeps_pure_states() {
        let plus = DensityMatrix::pure(&ket_plus()).unwrap();
        let (out, mag) = project_to_physical(plus.matrix(), 1e-9).unwrap();
        assert!(mag < 1e-15);
        assert!(out.matrix().max_abs_diff(plus.matrix()) < 1e-15);
    }

    #[test]
    fn em_step_fixed_point() {
        let m = model(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let up = TrajectoryState::initial(DensityMatrix::pure(&ket0()).unwrap());
        let c = IntegratorConfig::default();
        let mut rng = trajectory_rng(3, 0);
        for _ in 0..10 {
            let (next, info) = em_step(&m, &up, &c, &mut rng).unwrap();
            assert!(next.rho.matrix().max_abs_diff(up.rho.matrix()) < 1e-15);
            assert_eq!(info.repair, 0.0);
            assert!((next.w - info.dw).abs() < 1e-15);
            // Tr[(L + L†)ρ] = 2 on |0⟩
            assert!((next.y - (2.0 * c.dt + info.dw)).abs() < 1e-15);
        }
    }

    #[test]
    fn em_step_forced_increment() {
        let m = model(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let s = TrajectoryState::initial(DensityMatrix::maximally_mixed(2));
        let c = cfg(0.01, 1.0, 1);
        let (next, _) = em_step_with_increment(&m, &s, &c, 0.1).unwrap();
        // H[σ_z](I/2) = σ_z and the drift vanishes, so Δρ = 0.1 σ_z.
        let expected = ComplexMatrix::from_real_diagonal(&[0.6, 0.4]);
        assert!(next.rho.matrix().max_abs_diff(&expected) < 1e-14);
        assert!((next.t - 0.01).abs() < 1e-18);
    }

    #[test]
    fn em_steps_keep_unit_trace() {
        let m = ModelSpec::new(sigma_y(), sigma_z(), sigma_minus().scale_real(2.0), ControlLaw::BlochXProportional { gain: 1.0 })
            .unwrap();
        let c = IntegratorConfig::default();
        let mut rng = trajectory_rng(8, 0);
        let mut s = TrajectoryState::initial(DensityMatrix::pure(&ket_plus()).unwrap());
        for _ in 0..2000 {
            s = em_step(&m, &s, &c, &mut rng).unwrap().0;
            assert!((s.rho.matrix().trace().re - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(cfg(0.0, 1.0, 1).validate().is_err());
        assert!(cfg(0.1, 0.01, 1).validate().is_err());
        assert!(cfg(0.1, 1.0, 0).validate().is_err());
    }

    #[test]
    fn rk4_matches_analytic_dephasing_and_decay() {
        let c = cfg(1e-3, 1.0, 1000);
        let deph = model(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let rec = integrate_me(&deph, &DensityMatrix::pure(&ket_plus()).unwrap(), &c, 0.0).unwrap();
        assert!((bloch_x(rec.states.last().unwrap()) - (-2.0f64).exp()).abs() < 1e-6);

        let decay = model(sigma_y(), ComplexMatrix::zeros(2), sigma_minus());
        let rec = integrate_me(&decay, &DensityMatrix::pure(&ket0()).unwrap(), &c, 0.0).unwrap();
        assert!((bloch_z(rec.states.last().unwrap()) - (-1.0 + 2.0 * (-1.0f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn rk4_without_dynamics_is_static() {
        let rho0 = crate::sampling::random_density(3, 0.01, 4).unwrap();
        let rec = integrate_me(&ModelSpec::frozen(3), &rho0, &cfg(1e-2, 1.0, 10), 0.0).unwrap();
        assert_eq!(rec.len(), 11);
        for s in &rec.states {
            assert!(s.matrix().max_abs_diff(rho0.matrix()) < 1e-15);
        }
    }

    #[test]
    fn rk4_converges_under_step_halving() {
        let m = ModelSpec::new(sigma_y(), sigma_z(), sigma_minus().scale_real(6f64.sqrt()), ControlLaw::Zero).unwrap();
        let rho0 = DensityMatrix::pure(&ket_plus()).unwrap();
        let coarse = integrate_me(&m, &rho0, &cfg(1e-3, 3.0, 300), 0.7).unwrap();
        let fine = integrate_me(&m, &rho0, &cfg(5e-4, 3.0, 600), 0.7).unwrap();
        for (a, b) in coarse.states.iter().zip(&fine.states) {
            assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn exact_propagator_agrees_with_rk4() {
        let m = ModelSpec::new(sigma_y(), sigma_z(), sigma_minus().scale_real(2f64.sqrt()), ControlLaw::Zero).unwrap();
        let rho0 = DensityMatrix::pure(&ket_plus()).unwrap();
        let c = cfg(1e-3, 3.0, 100);
        let rk = integrate_me(&m, &rho0, &c, 0.4).unwrap();
        let ex = propagate_me(&m, &rho0, &c, 0.4).unwrap();
        assert_eq!(rk.times, ex.times);
        for (a, b) in rk.states.iter().zip(&ex.states) {
            assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn exact_propagator_handles_stiff_decay() {
        let m = model(sigma_y(), sigma_z(), sigma_minus().scale_real(1e3));
        let rec = propagate_me(&m, &DensityMatrix::pure(&ket0()).unwrap(), &cfg(1e-3, 1.0, 10), 0.0).unwrap();
        let last = rec.states.last().unwrap();
        assert!((bloch_z(last) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let m = model(sigma_y(), sigma_z(), sigma_minus().scale_real(2f64.sqrt()));
        let rho0 = DensityMatrix::pure(&ket_plus()).unwrap();
        let c = cfg(1e-3, 0.5, 10);
        let a = simulate_trajectory(&m, &rho0, &c, 99).unwrap();
        let b = simulate_trajectory(&m, &rho0, &c, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 51);
        assert_eq!(a.dw_draws.len(), a.len());
        assert_eq!(a.repair_magnitudes.len(), a.len());
    }

    #[test]
    fn probe_eigenstate_is_invariant() {
        let m = model(ComplexMatrix::zeros(2), sigma_z(), ComplexMatrix::zeros(2));
        let rho0 = DensityMatrix::pure(&ket0()).unwrap();
        let rec = simulate_trajectory(&m, &rho0, &cfg(1e-3, 1.0, 50), 5).unwrap();
        for s in &rec.states {
            assert!(s.matrix().max_abs_diff(rho0.matrix()) < 1e-15);
        }
    }

    #[test]
    fn measurement_purifies_most_trajectories() {
        let m = model(sigma_y(), sigma_z(), ComplexMatrix::zeros(2));
        let rho0 = DensityMatrix::pure(&ket_plus()).unwrap();
        let c = cfg(1e-3, 3.0, 3000);
        let pure = (0..100)
            .filter(|&seed| {
                let rec = simulate_trajectory(&m, &rho0, &c, seed).unwrap();
                rec.states.last().unwrap().purity() >= 0.9
            })
            .count();
        assert!(pure > 50, "{pure} of 100 trajectories purified");
    }
}
