use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{hermitian_eig, HermitianMatrix, RealSymmetricMatrix};
use crate::error::{Error, Result};

/// Read access to a dense matrix as complex entries.
pub trait Entries {
    fn shape(&self) -> (usize, usize);
    fn entry(&self, i: usize, j: usize) -> Complex64;

    fn to_complex(&self) -> DMatrix<Complex64> {
        let (r, c) = self.shape();
        DMatrix::from_fn(r, c, |i, j| self.entry(i, j))
    }
}

impl Entries for DMatrix<Complex64> {
    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self[(i, j)]
    }
    fn to_complex(&self) -> DMatrix<Complex64> {
        self.clone()
    }
}

impl Entries for DMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self[(i, j)], 0.0)
    }
}

impl Entries for HermitianMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.get(i, j)
    }
    fn to_complex(&self) -> DMatrix<Complex64> {
        self.as_matrix().clone()
    }
}

impl Entries for RealSymmetricMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }
    fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.get(i, j), 0.0)
    }
}

fn same_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.0 * a.1,
            actual: b.0 * b.1,
        });
    }
    Ok(())
}

pub fn frobenius_norm<A: Entries + ?Sized>(a: &A) -> f64 {
    let (r, c) = a.shape();
    let mut s = 0.0;
    for j in 0..c {
        for i in 0..r {
            s += a.entry(i, j).norm_sqr();
        }
    }
    s.sqrt()
}

/// `√Σ|A_ij − B_ij|²`.
pub fn frobenius_distance<A: Entries + ?Sized, B: Entries + ?Sized>(a: &A, b: &B) -> Result<f64> {
    same_shape(a.shape(), b.shape())?;
    let (r, c) = a.shape();
    let mut s = 0.0;
    for j in 0..c {
        for i in 0..r {
            s += (a.entry(i, j) - b.entry(i, j)).norm_sqr();
        }
    }
    Ok(s.sqrt())
}

/// `⟨A, B⟩ = Σ conj(A_ij)·B_ij`.
pub fn frobenius_inner<A: Entries + ?Sized, B: Entries + ?Sized>(a: &A, b: &B) -> Result<Complex64> {
    same_shape(a.shape(), b.shape())?;
    let (r, c) = a.shape();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..c {
        for i in 0..r {
            s += a.entry(i, j).conj() * b.entry(i, j);
        }
    }
    Ok(s)
}

/// Largest singular value.
pub fn spectral_norm<A: Entries + ?Sized>(a: &A) -> f64 {
    let m = a.to_complex();
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0f64, |acc, s| acc.max(*s))
}

impl HermitianMatrix {
    /// `max |λ_i|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let dec = hermitian_eig(self)?;
        Ok(dec.values()[0].abs().max(dec.values()[self.dim() - 1].abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let a = RealSymmetricMatrix::from_diagonal(&[3.0, 0.0]);
        let z = RealSymmetricMatrix::zeros(2);
        assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(frobenius_distance(&a, &z).unwrap(), 3.0);

        // |1+i|^2 = 2, twice → 4 → 2
        let h = HermitianMatrix::from_parts(2, &[0.0, 1.0, 1.0, 0.0], &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!((frobenius_distance(&h, &HermitianMatrix::zeros(2)).unwrap() - 2.0).abs() < 1e-15);
        assert!(frobenius_distance(&h, &RealSymmetricMatrix::zeros(3)).is_err());
    }

    #[test]
    fn distance_is_symmetric() {
        let a = HermitianMatrix::from_parts(2, &[1.0, 2.0, 2.0, -1.0], &[0.0, 0.5, -0.5, 0.0]).unwrap();
        let b = RealSymmetricMatrix::from_row_major(2, &[0.0, 1.0, 1.0, 4.0]).unwrap();
        assert_eq!(frobenius_distance(&a, &b).unwrap(), frobenius_distance(&b, &a).unwrap());
    }

    #[test]
    fn spectral_norm_examples() {
        let a = RealSymmetricMatrix::from_diagonal(&[-7.0, 2.0]);
        assert!((spectral_norm(&a) - 7.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&RealSymmetricMatrix::zeros(3)), 0.0);
        let h = HermitianMatrix::from_parts(2, &[2.0, 1.0, 1.0, 2.0], &[0.0, 1.0, -1.0, 0.0]).unwrap();
        assert!((spectral_norm(&h) - (2.0 + 2f64.sqrt())).abs() < 1e-13);
        assert!((h.spectral_norm().unwrap() - (2.0 + 2f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn inner_product_conjugates_left() {
        let a = DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        let b = DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        assert_eq!(frobenius_inner(&a, &b).unwrap(), Complex64::new(1.0, 0.0));
    }
}
