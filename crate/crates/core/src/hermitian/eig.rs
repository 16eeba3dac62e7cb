use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{HermitianMatrix, WeylChamberVector};
use crate::error::{Error, Result};

/// Reconstruction / orthonormality tolerance, relative.
pub const EIG_TOL: f64 = 1e-8;

const MAX_SWEEPS_PER_DIM: usize = 1000;

/// Non-increasing eigenvalues with matching orthonormal eigenvector columns.
///
/// Each column is rotated so its largest-magnitude entry (lowest index on
/// ties) is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn chamber(&self) -> WeylChamberVector {
        WeylChamberVector::new_unchecked(self.values.clone())
    }

    /// Orthogonal projector onto the span of the first `k` eigenvectors.
    pub fn top_projector(&self, k: usize) -> DMatrix<Complex64> {
        let u = self.vectors.columns(0, k);
        u * u.adjoint()
    }

    /// `V diag(values) V^*`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        weighted_outer(&self.vectors, &self.values, self.dim())
    }
}

fn weighted_outer(v: &DMatrix<Complex64>, w: &[f64], k: usize) -> DMatrix<Complex64> {
    let d = v.nrows();
    let mut scaled = v.columns(0, k).into_owned();
    for (j, wj) in w.iter().take(k).enumerate() {
        scaled.column_mut(j).scale_mut(*wj);
    }
    if k == 0 {
        return DMatrix::zeros(d, d);
    }
    scaled * v.columns(0, k).adjoint()
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Backed by nalgebra's Householder tridiagonalization + implicit QR. The
/// result is post-checked: a residual `‖HV − VΛ‖_F` above
/// `EIG_TOL·(1+‖H‖_F)` is reported as non-convergence.
pub fn hermitian_eig(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let d = h.dim();
    let m = h.as_matrix();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS_PER_DIM * d.max(1)).ok_or(
        Error::EigenNonConvergence {
            residual: f64::INFINITY,
        },
    )?;

    let mut order: Vec<usize> = (0..d).collect();
    // stable: equal eigenvalues keep solver order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best {
                best = a;
                pivot = i;
            }
        }
        let p = col[pivot];
        let phase = if p.norm() > 0.0 {
            p.conj() / p.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            vectors[(i, dst)] = col[i] * phase;
        }
        vectors[(pivot, dst)] = Complex64::new(vectors[(pivot, dst)].norm(), 0.0);
    }

    let hv = m * &vectors;
    let mut residual = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            residual += (hv[(i, j)] - vectors[(i, j)] * values[j]).norm_sqr();
        }
    }
    let residual = residual.sqrt();
    let hf = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(residual <= EIG_TOL * (1.0 + hf)) {
        return Err(Error::EigenNonConvergence { residual });
    }

    Ok(SpectralDecomposition { values, vectors })
}

/// Eigenvalues only, non-increasing. Cheaper than [`hermitian_eig`]; checked
/// against the trace instead of the full residual.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<WeylChamberVector> {
    let m = h.as_matrix();
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let trace: f64 = (0..h.dim()).map(|i| m[(i, i)].re).sum();
    let hf = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let residual = (values.iter().sum::<f64>() - trace).abs();
    if !(residual <= EIG_TOL * (1.0 + hf)) {
        return Err(Error::EigenNonConvergence { residual });
    }
    Ok(WeylChamberVector::new_unchecked(values))
}

/// `V diag(σ_1..σ_k, 0..0) V^*`: the best rank-`k` approximation when the
/// retained eigenvalues dominate in magnitude.
pub fn rank_k_truncate(dec: &SpectralDecomposition, k: usize) -> Result<HermitianMatrix> {
    if k > dec.dim() {
        return Err(Error::arg(format!("rank {k} out of range for dimension {}", dec.dim())));
    }
    Ok(HermitianMatrix::symmetrize(weighted_outer(
        &dec.vectors,
        &dec.values,
        k,
    )))
}

/// Best Frobenius approximation of rank at most `k`: keeps the `k`
/// eigenvalues of largest magnitude.
pub(crate) fn best_rank_k_by_magnitude(dec: &SpectralDecomposition, k: usize) -> DMatrix<Complex64> {
    let d = dec.dim();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| dec.values[b].abs().total_cmp(&dec.values[a].abs()));
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for &j in idx.iter().take(k) {
        let col = dec.vectors.column(j);
        out += (col * col.adjoint()) * Complex64::new(dec.values[j], 0.0);
    }
    out
}
