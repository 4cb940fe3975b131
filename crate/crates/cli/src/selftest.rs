//! Property suites run by `entroflux selftest`.

use std::io::Write;

use entroflux_core::dynamics::sme_increment;
use entroflux_core::entropy::{abe_gap, ito_entropy_rate_identity, lemma_gap, quantumness};
use entroflux_core::integrator::{integrate_me, IntegratorConfig};
use entroflux_core::linalg::{hermitian_eig, pauli, ComplexMatrix, DensityMatrix, DEFAULT_FLOOR};
use entroflux_core::qubit::{
    bloch_to_density, decay_oracle, density_to_bloch, dephasing_oracle, threshold_consistency, z_threshold,
    BlochVector, QubitScenario,
};
use entroflux_core::sampling::{random_density_with, random_hermitian, random_matrix};
use entroflux_core::{ControlLaw, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

const SEED: u64 = 0x5e1f_7e57;
const DIMS: [usize; 3] = [2, 3, 4];

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestOptions {
    /// Feeds a trace-1.1 matrix to the validation suite.
    pub inject_corrupt_state: bool,
}

/// A failed suite: what broke and the offending input.
#[derive(Debug)]
pub struct Counterexample {
    pub suite: &'static str,
    pub detail: String,
}

type SuiteResult = Result<usize, String>;

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

fn full_rank(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let min_eig = 1e-3 / dim as f64;
    random_density_with(dim, min_eig, rng).expect("valid sampling parameters")
}

fn err_string(e: entroflux_core::Error) -> String {
    e.to_string()
}

fn validation(opts: SelftestOptions) -> SuiteResult {
    let mut r = rng(1);
    let mut n = 0;
    for dim in DIMS {
        for _ in 0..100 {
            let rho = full_rank(dim, &mut r);
            DensityMatrix::new(rho.matrix().clone()).map_err(|e| format!("{e}\nrho = {rho:?}"))?;
            n += 1;
        }
    }
    let negative = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
    if DensityMatrix::new(negative.clone()).is_ok() {
        return Err(format!("accepted a state with a negative eigenvalue\nrho = {negative:?}"));
    }
    if opts.inject_corrupt_state {
        let corrupt = ComplexMatrix::from_real_diagonal(&[0.6, 0.5]);
        DensityMatrix::new(corrupt.clone()).map_err(|e| format!("{e}\nrho = {corrupt:?}"))?;
    }
    Ok(n + 1)
}

fn eigen(_: SelftestOptions) -> SuiteResult {
    let mut r = rng(2);
    let mut n = 0;
    for dim in DIMS {
        for _ in 0..300 {
            let a = random_hermitian(dim, &mut r);
            let eig = hermitian_eig(&a).map_err(err_string)?;
            let err = eig.reconstruct().max_abs_diff(&a);
            if err > 1e-10 * a.max_abs().max(1.0) {
                return Err(format!("reconstruction error {err:e}\nA = {a:?}"));
            }
            let v = &eig.eigenvectors;
            let gram = &v.dagger() * v;
            let ortho = gram.max_abs_diff(&ComplexMatrix::identity(dim));
            if ortho > 1e-10 {
                return Err(format!("eigenvectors not orthonormal ({ortho:e})\nA = {a:?}"));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn lemma(_: SelftestOptions) -> SuiteResult {
    let mut r = rng(3);
    let mut n = 0;
    for dim in DIMS {
        for _ in 0..1000 {
            let rho = full_rank(dim, &mut r);
            let gap = lemma_gap(&rho, DEFAULT_FLOOR).map_err(err_string)?;
            if gap < -1e-9 {
                return Err(format!("gap {gap:e}\nrho = {rho:?}"));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn abe(_: SelftestOptions) -> SuiteResult {
    let mut r = rng(4);
    let mut n = 0;
    for i in 0..1000 {
        let dim = DIMS[i % DIMS.len()];
        let rho = full_rank(dim, &mut r);
        let a = random_matrix(dim, &mut r);
        let gap = abe_gap(&a, &rho, DEFAULT_FLOOR).map_err(err_string)?;
        if gap < -1e-9 {
            return Err(format!("gap {gap:e}\nA = {a:?}\nrho = {rho:?}"));
        }
        let l = random_hermitian(dim, &mut r);
        let q = quantumness(&l, &rho).map_err(err_string)?;
        if q.abs() > 1e-12 {
            return Err(format!("quantumness of a Hermitian operator is {q:e}\nL = {l:?}\nrho = {rho:?}"));
        }
        n += 1;
    }
    Ok(n)
}

fn ito_identity(_: SelftestOptions) -> SuiteResult {
    let mut r = rng(5);
    for i in 0..500 {
        let dim = DIMS[i % DIMS.len()];
        let l = random_hermitian(dim, &mut r);
        let rho = full_rank(dim, &mut r);
        let id = ito_entropy_rate_identity(&l, &rho, DEFAULT_FLOOR).map_err(err_string)?;
        let rel = id.relative_error();
        if rel > 1e-8 {
            return Err(format!(
                "sample {i}: lhs {:.17e}, rhs {:.17e}, relative error {rel:e}\nL = {l:?}\nrho = {rho:?}",
                id.lhs, id.rhs
            ));
        }
    }
    Ok(500)
}

fn random_model(dim: usize, r: &mut ChaCha8Rng) -> ModelSpec {
    ModelSpec::new(
        random_hermitian(dim, r),
        random_hermitian(dim, r),
        random_matrix(dim, r),
        ControlLaw::Constant(r.random_range(-1.0..1.0)),
    )
    .expect("random model is valid")
}

fn superoperator(_: SelftestOptions) -> SuiteResult {
    let mut r = rng(6);
    let mut n = 0;
    for i in 0..1000 {
        let dim = DIMS[i % DIMS.len()];
        let model = random_model(dim, &mut r);
        let rho = full_rank(dim, &mut r);
        let dw = r.random_range(-0.1..0.1);
        let inc = sme_increment(&model, &rho, 1e-3, dw).map_err(err_string)?;
        let tr = inc.trace().norm();
        let asym = inc.max_asymmetry();
        if tr > 1e-12 || asym > 1e-12 {
            return Err(format!(
                "trace {tr:e}, asymmetry {asym:e}\nH = {:?}\nL = {:?}\nM = {:?}\nrho = {rho:?}",
                model.hamiltonian(),
                model.probe(),
                model.decoherence()
            ));
        }
        n += 1;
    }
    Ok(n)
}

fn me_oracles(_: SelftestOptions) -> SuiteResult {
    let cfg = IntegratorConfig {
        dt: 1e-3,
        t_final: 3.0,
        record_stride: 300,
        ..IntegratorConfig::default()
    };
    let zero = ComplexMatrix::zeros(2);
    let dephasing = ModelSpec::new(zero.clone(), pauli::sigma_z(), zero.clone(), ControlLaw::Zero).map_err(err_string)?;
    let decay = ModelSpec::new(zero.clone(), zero, pauli::sigma_minus(), ControlLaw::Zero).map_err(err_string)?;
    let plus = bloch_to_density(BlochVector::new(1.0, 0.0, 0.0)).map_err(err_string)?;
    let excited = bloch_to_density(BlochVector::new(0.0, 0.0, 1.0)).map_err(err_string)?;
    let mut n = 0;
    for (name, model, rho0) in [("dephasing", &dephasing, &plus), ("decay", &decay, &excited)] {
        let rec = integrate_me(model, rho0, &cfg, 0.0).map_err(err_string)?;
        for (t, rho) in rec.times.iter().zip(&rec.states) {
            let b = density_to_bloch(rho).map_err(err_string)?;
            let (got, want) = if name == "dephasing" {
                (b.x, dephasing_oracle(1.0, 1.0, *t))
            } else {
                (b.z, decay_oracle(1.0, 1.0, *t))
            };
            if (got - want).abs() > 1e-6 {
                return Err(format!("{name} at t = {t}: {got:.17e} vs oracle {want:.17e}"));
            }
            n += 1;
        }
    }
    Ok(n)
}

fn threshold(_: SelftestOptions) -> SuiteResult {
    let z0 = z_threshold(0.0).map_err(err_string)?;
    let z6 = z_threshold(6.0).map_err(err_string)?;
    if z0 != 1.0 || (z6 - 0.5).abs() > 1e-12 {
        return Err(format!("z_threshold(0) = {z0:e}, z_threshold(6) = {z6:e}"));
    }
    let mut prev = f64::INFINITY;
    for k in 0..=80 {
        let alpha = 10f64.powf(-4.0 + 0.1 * k as f64);
        let z = z_threshold(alpha).map_err(err_string)?;
        if z >= prev {
            return Err(format!("not decreasing at alpha = {alpha:e}"));
        }
        prev = z;
    }
    let mut n = 0;
    let mut disagreements = Vec::new();
    for alpha in [0.0, 0.5, 2.0, 6.0, 50.0] {
        let scenario = QubitScenario::new(1.0, alpha, ControlLaw::Zero).map_err(err_string)?;
        for k in 0..=200 {
            let z = (k as f64 - 100.0) / 100.0;
            if !threshold_consistency(&scenario, z).map_err(err_string)? {
                disagreements.push(format!("alpha = {alpha}, z = {z}"));
            }
            n += 1;
        }
    }
    if disagreements.is_empty() {
        Ok(n)
    } else {
        Err(format!(
            "sign test of the bound disagrees with z >= z_threshold(alpha) at {} of {n} points: {}",
            disagreements.len(),
            disagreements.join("; ")
        ))
    }
}

type Suite = (&'static str, fn(SelftestOptions) -> SuiteResult);

pub const SUITES: [Suite; 8] = [
    ("validation", validation),
    ("eigendecomposition", eigen),
    ("log lemma", lemma),
    ("dissipator entropy bound", abe),
    ("ito entropy identity", ito_identity),
    ("superoperator trace and hermiticity", superoperator),
    ("master equation oracles", me_oracles),
    ("qubit threshold", threshold),
];

/// Runs every suite, printing one line each, and returns the failures.
pub fn run_suites(opts: SelftestOptions, out: &mut impl Write) -> std::io::Result<Vec<Counterexample>> {
    let mut failures = Vec::new();
    for (name, suite) in SUITES {
        match suite(opts) {
            Ok(cases) => writeln!(out, "PASS {name} ({cases} cases)")?,
            Err(detail) => {
                writeln!(out, "FAIL {name}")?;
                failures.push(Counterexample { suite: name, detail });
            }
        }
    }
    Ok(failures)
}

pub fn selftest(opts: SelftestOptions, out: &mut impl Write) -> Result<(), CliError> {
    let failures = run_suites(opts, out)?;
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        writeln!(out, "\ncounterexample for {}:\n{}", f.suite, f.detail)?;
    }
    let names: Vec<&str> = failures.iter().map(|f| f.suite).collect();
    Err(CliError::Selftest(format!("failing suites: {}", names.join(", "))))
}
