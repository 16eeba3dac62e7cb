//! Utility experiments for the two mechanisms: strong metric `‖Y − M_k‖_F`,
//! weak metric `‖Y − M‖_F − ‖M_k − M‖_F`, dimension sweeps and the full-rank
//! tightness check.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{
    frobenius_distance, frobenius_norm, hermitian_eig, rank_k_truncate, HermitianMatrix, RealSymmetricMatrix,
};
use crate::mechanisms::{run_mechanism, ComplexNoise, MechanismOptions, PrivacyParams, Variant};
use crate::par;
use crate::rng::{lane, SeededRng, GAUSSIAN_TRANSFORM};
use crate::stats::{linear_fit, mean_and_se, LinearFit};

/// Slack for metrics that are nonnegative in exact arithmetic.
pub const METRIC_SLACK: f64 = 1e-9;

/// Target spectrum `σ_1 ≥ … ≥ σ_d ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpectrumSpec {
    values: Vec<f64>,
}

impl SpectrumSpec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg("spectrum values must be finite and nonnegative"));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::arg("spectrum must be non-increasing"));
        }
        Ok(Self { values })
    }

    /// Top `k` values equal to `level`, the rest zero.
    pub fn clustered(d: usize, k: usize, level: f64) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::arg(format!("need 1 ≤ k ≤ d, got k={k}, d={d}")));
        }
        let mut v = vec![0.0; d];
        v[..k].fill(level);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(σ_k, σ_{k+1})` with `σ_{d+1} = 0`.
    pub fn pair_at(&self, k: usize) -> (f64, f64) {
        (self.values[k - 1], self.values.get(k).copied().unwrap_or(0.0))
    }
}

impl TryFrom<Vec<f64>> for SpectrumSpec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpectrumSpec> for Vec<f64> {
    fn from(s: SpectrumSpec) -> Self {
        s.values
    }
}

/// Haar-ish orthogonal matrix: `Q` from the QR factorization of a Gaussian
/// matrix with the signs of `diag(R)` made nonnegative.
fn random_orthogonal(d: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.normal());
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q·diag(values)·Qᵀ` for a random orthogonal `Q`.
pub fn make_test_matrix(spec: &SpectrumSpec, rng: &mut SeededRng) -> RealSymmetricMatrix {
    let d = spec.dim();
    let q = random_orthogonal(d, rng);
    let mut scaled = q.clone();
    for (j, v) in spec.values().iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    RealSymmetricMatrix::symmetrize(&scaled * q.transpose())
}

/// `√(kd)·σ_k/(σ_k − σ_{k+1})·√(ln(1/δ))/ε`, without constants.
pub fn theoretical_bound(d: usize, k: usize, sigma_k: f64, sigma_k1: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(sigma_k > sigma_k1) || sigma_k1 < 0.0 {
        return Err(Error::arg(format!(
            "need σ_k > σ_(k+1) ≥ 0, got {sigma_k} and {sigma_k1}"
        )));
    }
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg("need ε > 0 and 0 < δ < 1"));
    }
    let kd = (k * d) as f64;
    Ok(kd.sqrt() * sigma_k / (sigma_k - sigma_k1) * (1.0 / delta).ln().sqrt() / epsilon)
}

/// `4·√(2 ln(1.25/δ))/ε·√d`, the required `k`-th gap.
pub fn eigengap_threshold(d: usize, params: &PrivacyParams) -> f64 {
    4.0 * (2.0 * (1.25 / params.delta()).ln()).sqrt() / params.epsilon() * (d as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCondition {
    pub met: bool,
    pub gap: f64,
    pub threshold: f64,
    /// `gap / threshold`.
    pub ratio: f64,
}

pub fn eigengap_condition_check(spec: &SpectrumSpec, k: usize, params: &PrivacyParams) -> Result<GapCondition> {
    if k == 0 || k > spec.dim() {
        return Err(Error::arg(format!("need 1 ≤ k ≤ d, got k={k}")));
    }
    let (a, b) = spec.pair_at(k);
    let gap = a - b;
    let threshold = eigengap_threshold(spec.dim(), params);
    Ok(GapCondition {
        met: gap >= threshold,
        gap,
        threshold,
        ratio: gap / threshold,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityExperimentConfig {
    pub spectrum: SpectrumSpec,
    pub k: usize,
    pub params: PrivacyParams,
    pub replications: usize,
    pub master_seed: u64,
    pub variants: Vec<Variant>,
    /// Reuse one `M` (replication 0's) for every replication.
    #[serde(default)]
    pub fixed_matrix: bool,
}

impl UtilityExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.spectrum.dim();
        if self.k == 0 || self.k > d {
            return Err(Error::arg(format!("need 1 ≤ k ≤ d, got k={}, d={d}", self.k)));
        }
        if self.replications == 0 {
            return Err(Error::arg("replications must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::arg("no mechanism variant requested"));
        }
        Ok(())
    }
}

/// Both metrics for a single mechanism run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub strong: f64,
    pub weak: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub completed: usize,
    pub failed: usize,
    /// `√(mean ‖Y − M_k‖²_F)`.
    pub rms_strong: f64,
    pub mean_strong: f64,
    pub se_strong: f64,
    pub rms_weak: f64,
    pub mean_weak: f64,
    pub se_weak: f64,
    pub max_rank: usize,
    /// Smallest `strong − weak` seen; the triangle inequality keeps it ≥ 0.
    pub min_triangle_margin: f64,
    pub min_weak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub master_seed: u64,
    pub gaussian_transform: String,
    pub parallel: bool,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityResult {
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub replications: usize,
    pub variants: Vec<VariantSummary>,
    pub bound_value: Option<f64>,
    pub gap_condition: GapCondition,
    pub metadata: ExperimentMetadata,
}

impl UtilityResult {
    pub fn variant(&self, v: Variant) -> Option<&VariantSummary> {
        self.variants.iter().find(|s| s.variant == v)
    }
}

fn variant_lane(v: Variant) -> u64 {
    match v {
        Variant::Complex => lane::MECHANISM,
        Variant::Real => lane::MECHANISM_REAL,
    }
}

/// Exact rank-`k` truncation of `M` (real, since `M` is).
pub fn best_rank_k(m: &RealSymmetricMatrix, k: usize) -> Result<RealSymmetricMatrix> {
    let dec = hermitian_eig(&m.to_hermitian())?;
    Ok(rank_k_truncate(&dec, k)?.real_part())
}

fn one_replication(
    config: &UtilityExperimentConfig,
    r: usize,
    fixed: Option<&(RealSymmetricMatrix, RealSymmetricMatrix)>,
) -> Vec<Result<ReplicationMetrics>> {
    let owned;
    let (m, m_k) = match fixed {
        Some(p) => (&p.0, &p.1),
        None => {
            let m = make_test_matrix(
                &config.spectrum,
                &mut SeededRng::substream(config.master_seed, r as u64, lane::MATRIX),
            );
            match best_rank_k(&m, config.k) {
                Ok(m_k) => {
                    owned = (m, m_k);
                    (&owned.0, &owned.1)
                }
                Err(e) => {
                    let msg = e.to_string();
                    return config
                        .variants
                        .iter()
                        .map(|_| Err(Error::arg(format!("test matrix: {msg}"))))
                        .collect();
                }
            }
        }
    };
    let opts = MechanismOptions::default();
    config
        .variants
        .iter()
        .map(|&v| {
            let mut rng = SeededRng::substream(config.master_seed, r as u64, variant_lane(v));
            let out = run_mechanism(v, m, config.k, &config.params, &mut rng, &opts)?;
            let strong = frobenius_distance(&out.y, m_k)?;
            let weak = frobenius_distance(&out.y, m)? - frobenius_distance(m_k, m)?;
            let rank = out.y.numerical_rank(crate::mechanisms::RANK_TOL)?;
            Ok(ReplicationMetrics { strong, weak, rank })
        })
        .collect()
}

fn summarize(variant: Variant, runs: &[Result<ReplicationMetrics>]) -> VariantSummary {
    let ok: Vec<ReplicationMetrics> = runs.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let strong: Vec<f64> = ok.iter().map(|m| m.strong).collect();
    let weak: Vec<f64> = ok.iter().map(|m| m.weak).collect();
    let (mean_strong, se_strong) = mean_and_se(&strong);
    let (mean_weak, se_weak) = mean_and_se(&weak);
    VariantSummary {
        variant,
        completed: ok.len(),
        failed: runs.len() - ok.len(),
        rms_strong: crate::stats::rms(&strong),
        mean_strong,
        se_strong,
        rms_weak: crate::stats::rms(&weak),
        mean_weak,
        se_weak,
        max_rank: ok.iter().map(|m| m.rank).max().unwrap_or(0),
        min_triangle_margin: ok.iter().map(|m| m.strong - m.weak).fold(f64::INFINITY, f64::min),
        min_weak: weak.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Per-replication metrics, indexed `[replication][variant]`.
pub fn utility_replications(config: &UtilityExperimentConfig) -> Result<Vec<Vec<Result<ReplicationMetrics>>>> {
    config.validate()?;
    let fixed = if config.fixed_matrix {
        let m = make_test_matrix(
            &config.spectrum,
            &mut SeededRng::substream(config.master_seed, 0, lane::MATRIX),
        );
        let m_k = best_rank_k(&m, config.k)?;
        Some((m, m_k))
    } else {
        None
    };
    Ok(par::map_indexed(config.replications, |r| {
        one_replication(config, r, fixed.as_ref())
    }))
}

/// Runs every requested variant on `replications` independent draws.
/// Failed replications are counted, not fatal, unless all of them fail.
pub fn run_utility_experiment(config: &UtilityExperimentConfig) -> Result<UtilityResult> {
    let start = Instant::now();
    let mut by_variant: Vec<Vec<Result<ReplicationMetrics>>> = config.variants.iter().map(|_| Vec::new()).collect();
    for rep in utility_replications(config)? {
        for (vi, run) in rep.into_iter().enumerate() {
            by_variant[vi].push(run);
        }
    }
    let mut variants = Vec::with_capacity(config.variants.len());
    for (&v, runs) in config.variants.iter().zip(by_variant) {
        let summary = summarize(v, &runs);
        if summary.completed == 0 {
            let first = runs.into_iter().find_map(|r| r.err()).expect("all replications failed");
            return Err(first);
        }
        if summary.failed > 0 {
            log::warn!(
                "{v:?}: {} of {} replications failed",
                summary.failed,
                config.replications
            );
        }
        variants.push(summary);
    }
    let d = config.spectrum.dim();
    let (sk, sk1) = config.spectrum.pair_at(config.k);
    let bound_value = theoretical_bound(d, config.k, sk, sk1, config.params.epsilon(), config.params.delta()).ok();
    Ok(UtilityResult {
        d,
        k: config.k,
        epsilon: config.params.epsilon(),
        delta: config.params.delta(),
        replications: config.replications,
        variants,
        bound_value,
        gap_condition: eigengap_condition_check(&config.spectrum, config.k, &config.params)?,
        metadata: ExperimentMetadata {
            master_seed: config.master_seed,
            gaussian_transform: GAUSSIAN_TRANSFORM.to_string(),
            parallel: par::is_parallel(),
            elapsed_ms: start.elapsed().as_millis(),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k: usize,
    pub dims: Vec<usize>,
    /// Clustered spectrum with top level `gap_multiple × threshold(d)`.
    pub gap_multiple: f64,
    pub params: PrivacyParams,
    pub replications: usize,
    pub master_seed: u64,
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub fixed_matrix: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub d: usize,
    pub level: f64,
    pub result: UtilityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExponentFit {
    Fitted {
        slope: f64,
        intercept: f64,
        r_squared: f64,
        n_points: usize,
    },
    /// All metrics zero (noise-free run); nothing to fit.
    SkippedNoiseFree,
    Underpowered {
        n_points: usize,
    },
}

impl ExponentFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            Self::Fitted { slope, .. } => Some(*slope),
            _ => None,
        }
    }
}

impl From<LinearFit> for ExponentFit {
    fn from(f: LinearFit) -> Self {
        Self::Fitted {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
            n_points: f.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantFit {
    pub variant: Variant,
    pub fit: ExponentFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub k: usize,
    pub gap_multiple: f64,
    pub points: Vec<SweepPoint>,
    /// Log-log slope of the RMS strong metric against `d`.
    pub fits: Vec<VariantFit>,
}

impl SweepResult {
    pub fn slope(&self, v: Variant) -> Option<f64> {
        self.fits.iter().find(|f| f.variant == v).and_then(|f| f.fit.slope())
    }
}

/// Seed for the experiment at dimension `d` of a sweep.
pub fn sweep_seed(master_seed: u64, d: usize) -> u64 {
    master_seed ^ ((d as u64) << 32)
}

pub fn dimension_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.dims.is_empty() {
        return Err(Error::Empty("dimension list".into()));
    }
    let mut points = Vec::with_capacity(config.dims.len());
    for &d in &config.dims {
        let level = config.gap_multiple * eigengap_threshold(d, &config.params);
        let exp = UtilityExperimentConfig {
            spectrum: SpectrumSpec::clustered(d, config.k, level)?,
            k: config.k,
            params: config.params,
            replications: config.replications,
            master_seed: sweep_seed(config.master_seed, d),
            variants: config.variants.clone(),
            fixed_matrix: config.fixed_matrix,
        };
        log::info!("sweep d={d}, level={level:.3}");
        points.push(SweepPoint {
            d,
            level,
            result: run_utility_experiment(&exp)?,
        });
    }
    let fits = config
        .variants
        .iter()
        .map(|&v| {
            let metric: Vec<(f64, f64)> = points
                .iter()
                .filter_map(|p| p.result.variant(v).map(|s| (p.d as f64, s.rms_strong)))
                .collect();
            let fit = if config.params.is_noiseless() || metric.iter().all(|(_, y)| *y == 0.0) {
                ExponentFit::SkippedNoiseFree
            } else {
                let (xs, ys): (Vec<f64>, Vec<f64>) = metric
                    .iter()
                    .filter(|(_, y)| *y > 0.0)
                    .map(|(x, y)| (x.ln(), y.ln()))
                    .unzip();
                match linear_fit(&xs, &ys) {
                    Some(f) if f.n_points >= 3 => f.into(),
                    _ => ExponentFit::Underpowered { n_points: xs.len() },
                }
            };
            VariantFit { variant: v, fit }
        })
        .collect();
    Ok(SweepResult {
        k: config.k,
        gap_multiple: config.gap_multiple,
        points,
        fits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub d: usize,
    pub t: f64,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub rms: f64,
    /// `2d√T`, the exact RMS of `‖M̂ − M‖_F`.
    pub reference: f64,
    pub ratio: f64,
    pub rms_ratio: f64,
}

/// Mean of `‖M̂ − M‖_F = √T‖G‖_F` over `n` draws against `2d√T`.
pub fn full_rank_tightness(d: usize, t: f64, n: usize, seed: u64) -> Result<TightnessReport> {
    if n < 100 {
        return Err(Error::arg(format!("need at least 100 draws, got {n}")));
    }
    if d == 0 || !(t > 0.0) {
        return Err(Error::arg("need d ≥ 1 and T > 0"));
    }
    let norms = par::map_indexed(n, |r| {
        let mut rng = SeededRng::substream(seed, r as u64, lane::MECHANISM);
        t.sqrt() * frobenius_norm(&ComplexNoise::sample(d, &mut rng).hermitian())
    });
    let (mean, se) = mean_and_se(&norms);
    let rms = crate::stats::rms(&norms);
    let reference = 2.0 * d as f64 * t.sqrt();
    Ok(TightnessReport {
        d,
        t,
        n,
        mean,
        se,
        rms,
        reference,
        ratio: mean / reference,
        rms_ratio: rms / reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// `‖M̂_k − Y‖_F`
    pub hat_to_y: f64,
    /// `‖M̂_k − M_k‖_F`
    pub hat_to_m_k: f64,
    /// `‖Y − M_k‖_F`
    pub y_to_m_k: f64,
    /// `|⟨Re(M̂_k) − Y, Im(M̂_k)⟩|`
    pub cross_term: f64,
    pub projection_holds: bool,
    pub orthogonality_holds: bool,
    pub chain_holds: bool,
}

impl OptimalityReport {
    pub fn holds(&self) -> bool {
        self.projection_holds && self.orthogonality_holds && self.chain_holds
    }
}

/// `‖M̂_k − Y‖ ≤ ‖M̂_k − M_k‖`, real/imaginary orthogonality, and the
/// consequence `‖Y − M_k‖ ≤ 2‖M̂_k − M_k‖`, all with slack `1e-9`.
pub fn postprocessing_optimality_check(
    m_hat_k: &HermitianMatrix,
    y: &RealSymmetricMatrix,
    m_k: &RealSymmetricMatrix,
) -> Result<OptimalityReport> {
    let hat_to_y = frobenius_distance(m_hat_k, y)?;
    let hat_to_m_k = frobenius_distance(m_hat_k, m_k)?;
    let y_to_m_k = frobenius_distance(y, m_k)?;
    let re_minus_y = m_hat_k.real_part().as_matrix() - y.as_matrix();
    let im = m_hat_k.imag_part();
    let cross_term = re_minus_y.component_mul(&im).sum().abs();
    let scale = frobenius_norm(m_hat_k).powi(2);
    Ok(OptimalityReport {
        hat_to_y,
        hat_to_m_k,
        y_to_m_k,
        cross_term,
        projection_holds: hat_to_y <= hat_to_m_k + METRIC_SLACK,
        orthogonality_holds: cross_term <= METRIC_SLACK * scale.max(1.0),
        chain_holds: y_to_m_k <= 2.0 * hat_to_m_k + METRIC_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::hermitian_eigenvalues;
    use nalgebra::Complex;

    fn params() -> PrivacyParams {
        PrivacyParams::new(1.0, 0.05).unwrap()
    }

    #[test]
    fn isotropic_spectrum_gives_identity() {
        let m = make_test_matrix(&SpectrumSpec::new(vec![1.0; 4]).unwrap(), &mut SeededRng::new(5));
        let diff = (m.as_matrix() - DMatrix::<f64>::identity(4, 4)).abs().max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn test_matrix_has_prescribed_spectrum() {
        let spec = SpectrumSpec::new(vec![9.0, 4.5, 4.5, 1.0, 0.0]).unwrap();
        let a = make_test_matrix(&spec, &mut SeededRng::new(1));
        let b = make_test_matrix(&spec, &mut SeededRng::new(2));
        assert!(a.as_matrix() != b.as_matrix());
        for m in [a, b] {
            let e = hermitian_eigenvalues(&m.to_hermitian()).unwrap();
            for (x, y) in e.as_slice().iter().zip(spec.values()) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn spectrum_validation() {
        assert!(SpectrumSpec::new(vec![1.0, 2.0]).is_err());
        assert!(SpectrumSpec::new(vec![1.0, -1.0]).is_err());
        assert!(SpectrumSpec::new(vec![]).is_err());
        assert_eq!(
            SpectrumSpec::clustered(4, 2, 3.0).unwrap().values(),
            &[3.0, 3.0, 0.0, 0.0]
        );
    }

    #[test]
    fn bound_examples() {
        let e = std::f64::consts::E;
        assert!((theoretical_bound(1, 1, 2.0, 1.0, 1.0, 1.0 / e).unwrap() - 2.0).abs() < 1e-14);
        let a = theoretical_bound(8, 2, 5.0, 1.0, 0.5, 0.01).unwrap();
        let b = theoretical_bound(16, 2, 5.0, 1.0, 0.5, 0.01).unwrap();
        assert!((b / a - 2f64.sqrt()).abs() < 1e-14);
        // σ_k/gap = 1 + σ_(k+1)/gap
        let c = theoretical_bound(6, 3, 7.0, 2.0, 1.0, 1.0 / e).unwrap();
        assert!((c - 18f64.sqrt() * (1.0 + 2.0 / 5.0)).abs() < 1e-12);
        assert!(theoretical_bound(4, 1, 1.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn gap_threshold_examples() {
        let p = params();
        let th = eigengap_threshold(16, &p);
        assert!((th - 4.0 * (2.0 * 25f64.ln()).sqrt() * 4.0).abs() < 1e-12);
        assert!((th - 40.6).abs() < 0.01);
        let at = SpectrumSpec::new(vec![
            th, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ])
        .unwrap();
        let c = eigengap_condition_check(&at, 1, &p).unwrap();
        assert!(c.met && c.ratio == 1.0);
        let flat = SpectrumSpec::new(vec![1.0; 16]).unwrap();
        assert!(!eigengap_condition_check(&flat, 3, &p).unwrap().met);
    }

    #[test]
    fn noiseless_metrics_vanish() {
        let cfg = UtilityExperimentConfig {
            spectrum: SpectrumSpec::new(vec![5.0, 3.0, 1.0, 0.0]).unwrap(),
            k: 2,
            params: PrivacyParams::noiseless(1.0, 0.05).unwrap(),
            replications: 1,
            master_seed: 0,
            variants: vec![Variant::Complex, Variant::Real],
            fixed_matrix: false,
        };
        let r = run_utility_experiment(&cfg).unwrap();
        for v in &r.variants {
            assert!(v.mean_strong < 1e-9 && v.mean_weak.abs() < 1e-9, "{v:?}");
        }
    }

    #[test]
    fn clustered_run_is_reproducible_and_consistent() {
        let d = 8;
        let level = 8.0 * eigengap_threshold(d, &params());
        let cfg = UtilityExperimentConfig {
            spectrum: SpectrumSpec::clustered(d, 2, level).unwrap(),
            k: 2,
            params: params(),
            replications: 40,
            master_seed: 17,
            variants: vec![Variant::Complex, Variant::Real],
            fixed_matrix: false,
        };
        let a = run_utility_experiment(&cfg).unwrap();
        let b = run_utility_experiment(&cfg).unwrap();
        assert_eq!(a.variants, b.variants);
        assert!(a.gap_condition.met);
        for v in &a.variants {
            assert!(v.mean_strong.is_finite() && v.mean_strong > 0.0);
            assert!(v.min_triangle_margin >= -METRIC_SLACK);
            assert!(v.min_weak >= -METRIC_SLACK);
            assert!(v.max_rank <= 2);
            assert_eq!(v.failed, 0);
        }
        let fixed = UtilityExperimentConfig {
            fixed_matrix: true,
            ..cfg
        };
        assert!(run_utility_experiment(&fixed).is_ok());
    }

    #[test]
    fn noise_free_sweep_skips_fit() {
        let cfg = SweepConfig {
            k: 1,
            dims: vec![4, 8],
            gap_multiple: 8.0,
            params: PrivacyParams::noiseless(1.0, 0.05).unwrap(),
            replications: 2,
            master_seed: 3,
            variants: vec![Variant::Complex],
            fixed_matrix: false,
        };
        let r = dimension_sweep(&cfg).unwrap();
        assert_eq!(r.fits[0].fit, ExponentFit::SkippedNoiseFree);
        assert!(r.slope(Variant::Complex).is_none());
    }

    #[test]
    fn tightness_homogeneous_in_t() {
        let a = full_rank_tightness(6, 1.0, 200, 9).unwrap();
        let b = full_rank_tightness(6, 4.0, 200, 9).unwrap();
        assert!((b.mean / a.mean - 2.0).abs() < 1e-12);
        assert!((a.rms_ratio - 1.0).abs() < 0.05);
        assert!(full_rank_tightness(6, 1.0, 50, 9).is_err());
    }

    #[test]
    fn optimality_real_input_is_fixed_point() {
        let m = RealSymmetricMatrix::from_diagonal(&[3.0, 1.0, 0.0]);
        let r = postprocessing_optimality_check(&m.to_hermitian(), &m, &m).unwrap();
        assert_eq!(r.hat_to_y, 0.0);
        assert!(r.holds());
    }

    #[test]
    fn optimality_imaginary_input() {
        let h = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 1.5),
                Complex::new(0.0, -1.5),
                Complex::new(0.0, 0.0),
            ],
        ))
        .unwrap();
        let y = RealSymmetricMatrix::zeros(2);
        let r = postprocessing_optimality_check(&h, &y, &y).unwrap();
        assert!((r.hat_to_y - frobenius_norm(&h.imag_part())).abs() < 1e-15);
        assert!(r.holds());
    }
}
