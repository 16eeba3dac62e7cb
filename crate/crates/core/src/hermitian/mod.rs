//! Dense complex Hermitian and real symmetric matrices.

pub(crate) mod eig;
mod inequalities;
mod norms;

pub use eig::{hermitian_eig, hermitian_eigenvalues, rank_k_truncate, SpectralDecomposition};
pub use inequalities::{check_davis_kahan, check_weyl, DavisKahanOutcome, DavisKahanReport, WeylReport};
pub use norms::{frobenius_distance, frobenius_inner, frobenius_norm, spectral_norm, Entries};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `|H_ij - conj(H_ji)|` accepted by the constructors.
pub const SYMMETRY_TOL: f64 = 1e-12;

fn check_square<T>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::arg("matrix dimension must be positive"));
    }
    Ok(m.nrows())
}

/// Dense `d x d` complex matrix equal to its conjugate transpose.
///
/// Storage is exactly Hermitian: `H[(j, i)]` is bitwise `conj(H[(i, j)])` and
/// the diagonal is real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Validates finiteness and Hermitian symmetry (within [`SYMMETRY_TOL`]
    /// relative to the largest entry), then symmetrizes.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let d = check_square(&m)?;
        let mut scale = 1.0f64;
        for j in 0..d {
            for i in 0..d {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                scale = scale.max(z.norm());
            }
        }
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > SYMMETRY_TOL * scale {
            return Err(Error::NotHermitian { max_asymmetry: worst });
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrizes without validation. For matrices that are Hermitian up to
    /// rounding by construction.
    pub(crate) fn symmetrize(mut m: DMatrix<Complex64>) -> Self {
        let d = m.nrows();
        for i in 0..d {
            m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..d {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        Self { inner: m }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            inner: DMatrix::zeros(d, d),
        }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = DMatrix::zeros(d, d);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        Self { inner: m }
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_parts(d: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != d * d || im.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: re.len().max(im.len()),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| Complex64::new(re[i * d + j], im[i * d + j]));
        Self::new(m)
    }

    pub fn from_real(m: &RealSymmetricMatrix) -> Self {
        Self {
            inner: m.as_matrix().map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            inner: &self.inner + &other.inner,
        })
    }

    pub fn scale(&self, c: f64) -> HermitianMatrix {
        Self {
            inner: self.inner.map(|z| z * c),
        }
    }

    /// Entrywise real part. Exactly symmetric because storage is exactly Hermitian.
    pub fn real_part(&self) -> RealSymmetricMatrix {
        RealSymmetricMatrix {
            inner: self.inner.map(|z| z.re),
        }
    }

    /// Entrywise imaginary part (antisymmetric).
    pub fn imag_part(&self) -> DMatrix<f64> {
        self.inner.map(|z| z.im)
    }
}

/// See [`HermitianMatrix::real_part`].
pub fn real_part(h: &HermitianMatrix) -> RealSymmetricMatrix {
    h.real_part()
}

/// Dense real symmetric matrix, stored exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymmetricMatrix {
    inner: DMatrix<f64>,
}

impl RealSymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = check_square(&m)?;
        let mut scale = 1.0f64;
        for j in 0..d {
            for i in 0..d {
                let x = m[(i, j)];
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                scale = scale.max(x.abs());
            }
        }
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > SYMMETRY_TOL * scale {
            return Err(Error::NotHermitian { max_asymmetry: worst });
        }
        Ok(Self::symmetrize(m))
    }

    /// Like [`RealSymmetricMatrix::new`] with a caller-chosen absolute tolerance.
    pub fn with_tolerance(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let d = check_square(&m)?;
        for j in 0..d {
            for i in 0..d {
                if !m[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > tol {
            return Err(Error::NotHermitian { max_asymmetry: worst });
        }
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> Self {
        let d = m.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Self { inner: m }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            inner: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            inner: DMatrix::identity(d, d),
        }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = DMatrix::zeros(d, d);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Self { inner: m }
    }

    /// Builds from row-major entries.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::from_real(self)
    }

    pub fn row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d * d).map(|k| self.inner[(k / d, k % d)]).collect()
    }

    /// Numerical rank: eigenvalues with `|λ| > threshold_rel * ‖A‖_2`.
    pub fn numerical_rank(&self, threshold_rel: f64) -> Result<usize> {
        let dec = hermitian_eig(&self.to_hermitian())?;
        let norm = dec.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 {
            return Ok(0);
        }
        Ok(dec.values().iter().filter(|v| v.abs() > threshold_rel * norm).count())
    }
}

/// Non-increasing real vector: a point of the Weyl chamber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeylChamberVector {
    coords: Vec<f64>,
}

impl WeylChamberVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        if let Some(i) = coords.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::arg(format!(
                "coordinates not non-increasing at index {i}: {} < {}",
                coords[i],
                coords[i + 1]
            )));
        }
        Ok(Self { coords })
    }

    /// Sorts into non-increasing order first.
    pub fn from_unsorted(mut coords: Vec<f64>) -> Result<Self> {
        coords.sort_by(|a, b| b.total_cmp(a));
        Self::new(coords)
    }

    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.windows(2).all(|w| w[0] >= w[1]));
        Self { coords }
    }

    pub fn zeros(d: usize) -> Self {
        Self { coords: vec![0.0; d] }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.coords.windows(2).all(|w| w[0] > w[1])
    }

    /// Adjacent gaps `x_i - x_{i+1}`.
    pub fn gaps(&self) -> Vec<f64> {
        self.coords.windows(2).map(|w| w[0] - w[1]).collect()
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            coords: self.coords.iter().map(|x| x + c).collect(),
        }
    }
}

impl std::ops::Index<usize> for WeylChamberVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl TryFrom<Vec<f64>> for WeylChamberVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeylChamberVector> for Vec<f64> {
    fn from(w: WeylChamberVector) -> Vec<f64> {
        w.coords
    }
}

/// JSON form `{dim, re, im}` with row-major arrays; `im` omitted for real matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl From<&RealSymmetricMatrix> for MatrixJson {
    fn from(m: &RealSymmetricMatrix) -> Self {
        MatrixJson {
            dim: m.dim(),
            re: m.row_major(),
            im: None,
        }
    }
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(m: &HermitianMatrix) -> Self {
        let d = m.dim();
        let (re, im) = (0..d * d)
            .map(|k| {
                let z = m.get(k / d, k % d);
                (z.re, z.im)
            })
            .unzip();
        MatrixJson {
            dim: d,
            re,
            im: Some(im),
        }
    }
}

impl TryFrom<MatrixJson> for RealSymmetricMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if let Some(im) = &j.im {
            if im.iter().any(|x| *x != 0.0) {
                return Err(Error::arg("real matrix expected but `im` has nonzero entries"));
            }
        }
        RealSymmetricMatrix::from_row_major(j.dim, &j.re)
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        let im = j.im.unwrap_or_else(|| vec![0.0; j.re.len()]);
        HermitianMatrix::from_parts(j.dim, &j.re, &im)
    }
}

impl Serialize for RealSymmetricMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealSymmetricMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        RealSymmetricMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        HermitianMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}
