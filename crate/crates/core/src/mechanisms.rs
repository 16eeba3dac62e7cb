//! `(ε, δ)` Gaussian mechanisms for rank-`k` covariance approximation.
//!
//! The complex mechanism perturbs `M` by `√T·G` with
//! `G = (W1 + iW2) + (W1 + iW2)^*`, keeps the top-`k` eigenpairs and returns a
//! real matrix. Its input to the eigensolver is exactly the real Gaussian
//! mechanism's perturbed matrix `M + √T(W1 + W1^T)` plus the `M`-independent
//! term `√T(iW2 + (iW2)^*)`, so it inherits the real mechanism's privacy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::eig::best_rank_k_by_magnitude;
use crate::hermitian::{hermitian_eig, rank_k_truncate, HermitianMatrix, RealSymmetricMatrix, WeylChamberVector};
use crate::rng::{SeedRecord, SeededRng};

/// Relative PSD tolerance on the smallest eigenvalue of the input.
pub const PSD_TOL: f64 = 1e-8;

/// Relative threshold used when counting the numerical rank of an output.
pub const RANK_TOL: f64 = 1e-8;

/// `T = 2·ln(1.25/δ)/ε²`.
pub fn noise_scale(epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(2.0 * (1.25 / delta).ln() / (epsilon * epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
    noise_scale_t: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            epsilon,
            delta,
            noise_scale_t: noise_scale(epsilon, delta)?,
        })
    }

    /// Test hook: same `(ε, δ)` labels but `T = 0`. Provides no privacy.
    #[doc(hidden)]
    pub fn noiseless(epsilon: f64, delta: f64) -> Result<Self> {
        let mut p = Self::new(epsilon, delta)?;
        p.noise_scale_t = 0.0;
        Ok(p)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Noise variance `T`.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale_t
    }

    pub fn is_noiseless(&self) -> bool {
        self.noise_scale_t == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Complex,
    Real,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Variant::Complex),
            "real" => Ok(Variant::Real),
            other => Err(Error::arg(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdPolicy {
    /// Reject inputs whose smallest eigenvalue is below `−PSD_TOL·‖M‖_2`.
    #[default]
    Strict,
    WarnOnly,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MechanismOptions {
    pub psd: PsdPolicy,
}

#[derive(Debug, Clone)]
pub struct MechanismOutput {
    pub variant: Variant,
    /// Real symmetric output of rank at most `k`.
    pub y: RealSymmetricMatrix,
    /// Rank-`k` truncation of the perturbed matrix.
    pub m_hat_k: HermitianMatrix,
    /// All eigenvalues of the perturbed matrix, non-increasing.
    pub m_hat_values: WeylChamberVector,
    pub seed_record: SeedRecord,
}

/// The two i.i.d. `N(0,1)` matrices behind one draw of the complex noise.
#[derive(Debug, Clone)]
pub struct ComplexNoise {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

fn gaussian_matrix(d: usize, rng: &mut SeededRng) -> DMatrix<f64> {
    // row-major draw order
    let v: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
    DMatrix::from_row_slice(d, d, &v)
}

impl ComplexNoise {
    pub fn sample(d: usize, rng: &mut SeededRng) -> Self {
        let w1 = gaussian_matrix(d, rng);
        let w2 = gaussian_matrix(d, rng);
        Self { w1, w2 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w1: &self.w1 * c,
            w2: &self.w2 * c,
        }
    }

    /// `(W1 + iW2) + (W1 + iW2)^*`.
    pub fn hermitian(&self) -> HermitianMatrix {
        let d = self.w1.nrows();
        HermitianMatrix::symmetrize(perturb_complex(&DMatrix::zeros(d, d), &self.w1, &self.w2))
    }
}

/// Entrywise `M + (W1 + W1^T) + i(W2 − W2^T)`; exactly Hermitian for exactly
/// symmetric `M`.
fn perturb_complex(m: &DMatrix<f64>, w1: &DMatrix<f64>, w2: &DMatrix<f64>) -> DMatrix<Complex64> {
    let d = m.nrows();
    DMatrix::from_fn(d, d, |i, j| {
        Complex64::new(m[(i, j)] + (w1[(i, j)] + w1[(j, i)]), w2[(i, j)] - w2[(j, i)])
    })
}

/// Entrywise `M + (W1 + W1^T)`.
fn perturb_real(m: &DMatrix<f64>, w1: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    DMatrix::from_fn(d, d, |i, j| m[(i, j)] + (w1[(i, j)] + w1[(j, i)]))
}

/// One draw of `G = (W1 + iW2) + (W1 + iW2)^*`: diagonal real with variance 4,
/// off-diagonal real and imaginary parts each with variance 2.
pub fn sample_complex_perturbation(d: usize, rng: &mut SeededRng) -> HermitianMatrix {
    ComplexNoise::sample(d, rng).hermitian()
}

/// One draw of `W1 + W1^T`: diagonal variance 4, off-diagonal variance 2.
pub fn sample_real_perturbation(d: usize, rng: &mut SeededRng) -> RealSymmetricMatrix {
    let w1 = gaussian_matrix(d, rng);
    RealSymmetricMatrix::symmetrize(perturb_real(&DMatrix::zeros(d, d), &w1))
}

fn validate_input(m: &RealSymmetricMatrix, k: usize, opts: &MechanismOptions) -> Result<()> {
    let d = m.dim();
    if k == 0 || k > d {
        return Err(Error::arg(format!("k must lie in 1..={d}, got {k}")));
    }
    let dec = hermitian_eig(&m.to_hermitian())?;
    let top = dec.values()[0];
    let bottom = dec.values()[d - 1];
    let norm = top.abs().max(bottom.abs());
    let tol = PSD_TOL * norm;
    if bottom < -tol {
        match opts.psd {
            PsdPolicy::Strict => {
                return Err(Error::NotPsd {
                    min_eigenvalue: bottom,
                    tolerance: -tol,
                })
            }
            PsdPolicy::WarnOnly => {
                log::warn!("mechanism input not PSD: smallest eigenvalue {bottom:e}")
            }
        }
    }
    if top > (d as f64).powi(50) {
        log::warn!("largest eigenvalue {top:e} exceeds d^50; utility guarantee not covered");
    }
    Ok(())
}

/// Complex Gaussian mechanism with default options.
pub fn complex_gaussian_mechanism(
    m: &RealSymmetricMatrix,
    k: usize,
    params: &PrivacyParams,
    rng: &mut SeededRng,
) -> Result<MechanismOutput> {
    complex_gaussian_mechanism_with(m, k, params, rng, &MechanismOptions::default())
}

/// Perturbs `M` by `√T·G`, truncates to the top `k` eigenpairs and returns the
/// closest real matrix of rank at most `k` (in Frobenius norm) to that
/// truncation.
///
/// The closest real rank-`k` matrix is the rank-`k` truncation of the real
/// part: the imaginary part is Frobenius-orthogonal to every real matrix.
/// When the real part already has rank `≤ k` the two coincide.
pub fn complex_gaussian_mechanism_with(
    m: &RealSymmetricMatrix,
    k: usize,
    params: &PrivacyParams,
    rng: &mut SeededRng,
    opts: &MechanismOptions,
) -> Result<MechanismOutput> {
    validate_input(m, k, opts)?;
    let seed_record = rng.record();
    let noise = ComplexNoise::sample(m.dim(), rng).scaled(params.noise_scale().sqrt());
    let m_hat = HermitianMatrix::symmetrize(perturb_complex(m.as_matrix(), &noise.w1, &noise.w2));
    finish_complex(&m_hat, k, seed_record)
}

pub(crate) fn finish_complex(m_hat: &HermitianMatrix, k: usize, seed_record: SeedRecord) -> Result<MechanismOutput> {
    let dec = hermitian_eig(m_hat)?;
    let m_hat_k = rank_k_truncate(&dec, k)?;
    let re = m_hat_k.real_part();
    let re_dec = hermitian_eig(&re.to_hermitian())?;
    let y = RealSymmetricMatrix::symmetrize(best_rank_k_by_magnitude(&re_dec, k).map(|z| z.re));
    Ok(MechanismOutput {
        variant: Variant::Complex,
        y,
        m_hat_k,
        m_hat_values: dec.chamber(),
        seed_record,
    })
}

pub fn real_gaussian_mechanism(
    m: &RealSymmetricMatrix,
    k: usize,
    params: &PrivacyParams,
    rng: &mut SeededRng,
) -> Result<MechanismOutput> {
    real_gaussian_mechanism_with(m, k, params, rng, &MechanismOptions::default())
}

/// Perturbs `M` by `√T(W1 + W1^T)` and returns the rank-`k` truncation.
pub fn real_gaussian_mechanism_with(
    m: &RealSymmetricMatrix,
    k: usize,
    params: &PrivacyParams,
    rng: &mut SeededRng,
    opts: &MechanismOptions,
) -> Result<MechanismOutput> {
    validate_input(m, k, opts)?;
    let seed_record = rng.record();
    let w1 = gaussian_matrix(m.dim(), rng) * params.noise_scale().sqrt();
    let m_hat = RealSymmetricMatrix::symmetrize(perturb_real(m.as_matrix(), &w1));
    let dec = hermitian_eig(&m_hat.to_hermitian())?;
    let m_hat_k = rank_k_truncate(&dec, k)?;
    Ok(MechanismOutput {
        variant: Variant::Real,
        y: m_hat_k.real_part(),
        m_hat_k,
        m_hat_values: dec.chamber(),
        seed_record,
    })
}

pub fn run_mechanism(
    variant: Variant,
    m: &RealSymmetricMatrix,
    k: usize,
    params: &PrivacyParams,
    rng: &mut SeededRng,
    opts: &MechanismOptions,
) -> Result<MechanismOutput> {
    match variant {
        Variant::Complex => complex_gaussian_mechanism_with(m, k, params, rng, opts),
        Variant::Real => real_gaussian_mechanism_with(m, k, params, rng, opts),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    /// Largest entrywise `|M̂ − (M + (W1+W1^T) + (iW2 + (iW2)^*))|`.
    pub max_deviation: f64,
    /// Largest `|Re(M̂) − (M + W1 + W1^T)|`: distance from the real mechanism's output.
    pub real_part_deviation: f64,
    pub holds: bool,
}

/// Confirms that the complex mechanism's perturbed matrix is the real
/// mechanism's perturbed matrix plus `iW2 + (iW2)^*`, entry by entry.
///
/// `w1`, `w2` are taken already scaled by `√T`.
pub fn post_processing_decomposition_check(
    m: &RealSymmetricMatrix,
    w1: &DMatrix<f64>,
    w2: &DMatrix<f64>,
) -> Result<DecompositionReport> {
    let d = m.dim();
    for w in [w1, w2] {
        if w.nrows() != d || w.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: w.nrows(),
            });
        }
    }
    let m_hat = perturb_complex(m.as_matrix(), w1, w2);
    let real_out = perturb_real(m.as_matrix(), w1);
    let mut max_dev = 0.0f64;
    let mut re_dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let imag_noise = Complex64::new(0.0, w2[(i, j)] - w2[(j, i)]);
            let rhs = Complex64::new(real_out[(i, j)], 0.0) + imag_noise;
            max_dev = max_dev.max((m_hat[(i, j)] - rhs).norm());
            re_dev = re_dev.max((m_hat[(i, j)].re - real_out[(i, j)]).abs());
        }
    }
    Ok(DecompositionReport {
        max_deviation: max_dev,
        real_part_deviation: re_dev,
        holds: max_dev == 0.0 && re_dev == 0.0,
    })
}

/// Rows of `A` with Euclidean norm at most `row_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<f64>,
    row_bound: f64,
}

impl DataMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row_bound(&self) -> f64 {
        self.row_bound
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Rescales rows with norm above `bound` onto the sphere of radius `bound`;
/// other rows are left untouched.
pub fn clip_rows(raw: DMatrix<f64>, bound: f64) -> Result<DataMatrix> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::arg(format!("row bound must be positive, got {bound}")));
    }
    let mut a = raw;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        let norm = a.row(i).norm();
        if norm > bound {
            let factor = norm / bound;
            for x in a.row_mut(i).iter_mut() {
                *x /= factor;
            }
        }
    }
    Ok(DataMatrix {
        entries: a,
        row_bound: bound,
    })
}

/// `M = A^T A`.
pub fn covariance_from_data(a: &DataMatrix) -> RealSymmetricMatrix {
    RealSymmetricMatrix::symmetrize(a.entries.tr_mul(&a.entries))
}
