//! Invariant suite run by `cgauss verify`: Weyl and Davis–Kahan on random
//! instances, the mechanism structure/optimality chain, and the classical
//! gap bounds. Deterministic for a given seed; writes nothing.

use serde::Serialize;

use crate::error::Result;
use crate::experiments::{best_rank_k, make_test_matrix, postprocessing_optimality_check, SpectrumSpec};
use crate::hermitian::{check_davis_kahan, check_weyl, DavisKahanOutcome, HermitianMatrix};
use crate::mechanisms::{
    complex_gaussian_mechanism, post_processing_decomposition_check, sample_complex_perturbation, ComplexNoise,
    PrivacyParams, RANK_TOL,
};
use crate::par;
use crate::random_matrix::{classical_gap_bounds_check, classical_locations};
use crate::rng::SeededRng;

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const INEQUALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSize {
    pub weyl: usize,
    pub davis_kahan: usize,
    pub structure: usize,
    pub classical_dims: &'static [usize],
}

pub const FULL: SuiteSize = SuiteSize {
    weyl: 1000,
    davis_kahan: 200,
    structure: 500,
    classical_dims: &[8, 16, 32, 64, 128],
};

pub const QUICK: SuiteSize = SuiteSize {
    weyl: 100,
    davis_kahan: 40,
    structure: 50,
    classical_dims: &[8, 16, 32],
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Instances that could not be evaluated (no admissible `Δ`).
    pub skipped: usize,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.skipped < self.instances
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

fn random_hermitian(rng: &mut SeededRng) -> HermitianMatrix {
    use rand::Rng;
    let d = rng.random_range(2..=8);
    let scale = 10f64.powf(rng.random_range(-1.0..2.0));
    sample_complex_perturbation(d, rng).scale(scale)
}

pub fn weyl_suite(n: usize, seed: u64) -> Result<CheckResult> {
    let margins = par::try_map_indexed(n, |r| {
        let mut rng = SeededRng::with_stream(seed, r as u64);
        let a = random_hermitian(&mut rng);
        let b = sample_complex_perturbation(a.dim(), &mut rng);
        check_weyl(&a, &b, INEQUALITY_TOL).map(|rep| (rep.holds, rep.worst_margin))
    })?;
    let failures = margins.iter().filter(|m| !m.0).count();
    let worst = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    Ok(CheckResult {
        name: "weyl".into(),
        instances: n,
        failures,
        skipped: 0,
        detail: format!("worst margin {worst:.3e}"),
    })
}

/// `Â = A + E` with `‖E‖` a few percent of `‖A‖`, split index drawn
/// uniformly from `1..d`.
pub fn davis_kahan_suite(n: usize, seed: u64) -> Result<CheckResult> {
    use rand::Rng;
    let outcomes = par::try_map_indexed(n, |r| {
        let mut rng = SeededRng::with_stream(seed, (1 << 32) | r as u64);
        let a = random_hermitian(&mut rng);
        let d = a.dim();
        let size = a.spectral_norm()? * rng.random_range(0.001..0.1);
        let e = sample_complex_perturbation(d, &mut rng);
        let e = e.scale(size / e.spectral_norm()?);
        let k = rng.random_range(1..d);
        check_davis_kahan(&a, &a.add(&e)?, k, INEQUALITY_TOL)
    })?;
    let failures = outcomes.iter().filter(|o| o.holds() == Some(false)).count();
    let skipped = outcomes.iter().filter(|o| o.holds().is_none()).count();
    let tightest = outcomes
        .iter()
        .filter_map(|o| match o {
            DavisKahanOutcome::Checked(r) if r.bound_frobenius > 0.0 => {
                Some(r.projector_diff_frobenius / r.bound_frobenius)
            }
            _ => None,
        })
        .fold(0.0, f64::max);
    Ok(CheckResult {
        name: "davis_kahan".into(),
        instances: n,
        failures,
        skipped,
        detail: format!("max lhs/bound {tightest:.3}, {skipped} without admissible gap"),
    })
}

/// One random mechanism instance at dimension `d`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StructureInstance {
    pub k: usize,
    pub symmetric: bool,
    pub rank: usize,
    pub decomposition_exact: bool,
    pub projection_holds: bool,
    pub orthogonality_holds: bool,
    pub chain_holds: bool,
}

impl StructureInstance {
    pub fn holds(&self) -> bool {
        self.symmetric
            && self.rank <= self.k
            && self.decomposition_exact
            && self.projection_holds
            && self.orthogonality_holds
            && self.chain_holds
    }
}

/// PSD `M` with a random spectrum, random `k`, ε and δ; runs the complex
/// mechanism and checks output shape, the decomposition identity on the
/// same noise draw, and the post-processing optimality chain.
pub fn structure_instance(d: usize, seed: u64, r: u64) -> Result<StructureInstance> {
    use rand::Rng;
    let mut setup = SeededRng::with_stream(seed, (2 << 32) | r);
    let mut values: Vec<f64> = (0..d).map(|_| setup.random_range(0.0..50.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let m = make_test_matrix(&SpectrumSpec::new(values)?, &mut setup);
    let k = setup.random_range(1..=d);
    let params = PrivacyParams::new(setup.random_range(0.2..4.0), setup.random_range(1e-6..0.2))?;

    let mech_seed = SeededRng::with_stream(seed, (3 << 32) | r);
    let out = complex_gaussian_mechanism(&m, k, &params, &mut mech_seed.clone())?;
    let noise = ComplexNoise::sample(d, &mut mech_seed.clone()).scaled(params.noise_scale().sqrt());
    let decomposition = post_processing_decomposition_check(&m, &noise.w1, &noise.w2)?;

    let y = out.y.as_matrix();
    let m_k = best_rank_k(&m, k)?;
    let opt = postprocessing_optimality_check(&out.m_hat_k, &out.y, &m_k)?;
    Ok(StructureInstance {
        k,
        symmetric: y == &y.transpose() && y.iter().all(|v| v.is_finite()),
        rank: out.y.numerical_rank(RANK_TOL)?,
        decomposition_exact: decomposition.holds,
        projection_holds: opt.projection_holds,
        orthogonality_holds: opt.orthogonality_holds,
        chain_holds: opt.chain_holds,
    })
}

pub fn structure_suite(n: usize, d: usize, seed: u64) -> Result<CheckResult> {
    let inst = par::try_map_indexed(n, |r| structure_instance(d, seed, r as u64))?;
    let failures = inst.iter().filter(|i| !i.holds()).count();
    Ok(CheckResult {
        name: "mechanism_structure".into(),
        instances: n,
        failures,
        skipped: 0,
        detail: format!("d={d}, max rank {}", inst.iter().map(|i| i.rank).max().unwrap_or(0)),
    })
}

pub fn classical_suite(dims: &[usize]) -> Result<CheckResult> {
    let mut failures = 0;
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = 0.0f64;
    for &d in dims {
        let loc = classical_locations(d)?;
        let rep = classical_gap_bounds_check(&loc);
        let edge_ok = (loc.at(1) - 2.0 * (d as f64).sqrt()).abs() <= 1e-9;
        if !rep.holds() || !edge_ok {
            failures += 1;
        }
        worst_lower = worst_lower.min(rep.min_lower_ratio);
        worst_upper = worst_upper.max(rep.max_upper_ratio);
    }
    Ok(CheckResult {
        name: "classical_gaps".into(),
        instances: dims.len(),
        failures,
        skipped: 0,
        detail: format!("min gap/lower {worst_lower:.3}, max gap/upper {worst_upper:.3}"),
    })
}

pub fn run_verify(size: SuiteSize, seed: u64) -> Result<VerifyReport> {
    Ok(VerifyReport {
        seed,
        checks: vec![
            weyl_suite(size.weyl, seed)?,
            davis_kahan_suite(size.davis_kahan, seed)?,
            structure_suite(size.structure, 8, seed)?,
            classical_suite(size.classical_dims)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let rep = run_verify(QUICK, DEFAULT_SEED).unwrap();
        for c in &rep.checks {
            assert!(c.passed(), "{c:?}");
        }
        assert!(rep.all_passed());
    }

    #[test]
    fn structure_instances_are_reproducible() {
        let a = structure_instance(6, 1, 4).unwrap();
        let b = structure_instance(6, 1, 4).unwrap();
        assert_eq!(a.k, b.k);
        assert_eq!(a.rank, b.rank);
        assert!(a.holds());
    }
}
