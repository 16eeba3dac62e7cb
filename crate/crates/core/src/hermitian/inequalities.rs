//! Checkers for the deterministic eigenvalue and eigenspace perturbation
//! inequalities (Weyl, Davis–Kahan sin-Θ).

use serde::Serialize;

use super::{frobenius_norm, hermitian_eig, spectral_norm, HermitianMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub holds: bool,
    /// Smallest slack over both sides and all indices (negative on violation).
    pub worst_margin: f64,
    pub violating_indices: Vec<usize>,
}

/// Checks `σ_i(A)+σ_d(B) ≤ σ_i(A+B) ≤ σ_i(A)+σ_1(B)` for every `i`.
pub fn check_weyl(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<WeylReport> {
    let sum = a.add(b)?;
    let ea = hermitian_eig(a)?;
    let eb = hermitian_eig(b)?;
    let es = hermitian_eig(&sum)?;
    let d = a.dim();
    let (b_top, b_bottom) = (eb.values()[0], eb.values()[d - 1]);

    let mut worst = f64::INFINITY;
    let mut violating = Vec::new();
    for i in 0..d {
        let lower = es.values()[i] - (ea.values()[i] + b_bottom);
        let upper = ea.values()[i] + b_top - es.values()[i];
        let m = lower.min(upper);
        worst = worst.min(m);
        if m < -tol {
            violating.push(i);
        }
    }
    Ok(WeylReport {
        holds: violating.is_empty(),
        worst_margin: worst,
        violating_indices: violating,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DavisKahanReport {
    /// Largest admissible separation for the split after index `k`.
    pub delta: f64,
    pub projector_diff_frobenius: f64,
    pub projector_diff_operator: f64,
    pub bound_frobenius: f64,
    pub bound_operator: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DavisKahanOutcome {
    Checked(DavisKahanReport),
    /// Some trailing eigenvalue of `Â` lies inside the span of the top-`k`
    /// eigenvalues of `A`; no `Δ > 0` exists.
    NoAdmissibleDelta {
        overlap: f64,
    },
}

impl DavisKahanOutcome {
    pub fn holds(&self) -> Option<bool> {
        match self {
            DavisKahanOutcome::Checked(r) => Some(r.holds),
            DavisKahanOutcome::NoAdmissibleDelta { .. } => None,
        }
    }
}

/// Checks `|||U_1U_1^* − Û_1Û_1^*||| ≤ |||Â − A|||/Δ` for the split after the
/// top `k` eigenvectors, in Frobenius and operator norm.
///
/// The top-`k` spectrum of `A` spans `[σ_k(A), σ_1(A)]`; `Δ` is the distance
/// from that interval to the nearest of `σ̂_{k+1..d}(Â)`.
pub fn check_davis_kahan(
    a: &HermitianMatrix,
    a_hat: &HermitianMatrix,
    k: usize,
    tol: f64,
) -> Result<DavisKahanOutcome> {
    let d = a.dim();
    if a_hat.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: a_hat.dim(),
        });
    }
    if k == 0 || k > d {
        return Err(Error::arg(format!("split index {k} out of range 1..={d}")));
    }
    let ea = hermitian_eig(a)?;
    let eh = hermitian_eig(a_hat)?;
    let (lo, hi) = (ea.values()[k - 1], ea.values()[0]);

    let mut delta = f64::INFINITY;
    for &v in &eh.values()[k..] {
        let dist = if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            return Ok(DavisKahanOutcome::NoAdmissibleDelta {
                overlap: (v - lo).min(hi - v),
            });
        };
        delta = delta.min(dist);
    }

    let diff = ea.top_projector(k) - eh.top_projector(k);
    let pert = a_hat.as_matrix() - a.as_matrix();
    let lhs_f = frobenius_norm(&diff);
    let lhs_o = spectral_norm(&diff);
    let (rhs_f, rhs_o) = if delta.is_infinite() {
        (0.0, 0.0)
    } else {
        (frobenius_norm(&pert) / delta, spectral_norm(&pert) / delta)
    };
    Ok(DavisKahanOutcome::Checked(DavisKahanReport {
        delta,
        projector_diff_frobenius: lhs_f,
        projector_diff_operator: lhs_o,
        bound_frobenius: rhs_f,
        bound_operator: rhs_o,
        holds: lhs_f <= rhs_f + tol && lhs_o <= rhs_o + tol,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weyl_commuting_diagonals() {
        let a = HermitianMatrix::from_diagonal(&[3.0, 1.0]);
        let b = HermitianMatrix::from_diagonal(&[1.0, -1.0]);
        let r = check_weyl(&a, &b, 0.0).unwrap();
        assert!(r.holds);
        // 2 ≤ 4 ≤ 4 and 0 ≤ 0 ≤ 2: both tight somewhere
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn weyl_zero_perturbation() {
        let a = HermitianMatrix::from_diagonal(&[2.0, -5.0, 0.5]);
        let r = check_weyl(&a, &HermitianMatrix::zeros(3), 0.0).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn weyl_dim_mismatch() {
        assert!(check_weyl(&HermitianMatrix::zeros(2), &HermitianMatrix::zeros(3), 0.0).is_err());
    }

    #[test]
    fn davis_kahan_identical() {
        let a = HermitianMatrix::from_diagonal(&[4.0, 1.0, 0.0]);
        match check_davis_kahan(&a, &a, 1, 1e-12).unwrap() {
            DavisKahanOutcome::Checked(r) => {
                assert!(r.holds);
                assert!(r.projector_diff_frobenius < 1e-14);
                assert_eq!(r.delta, 3.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn davis_kahan_two_by_two() {
        let a = HermitianMatrix::from_diagonal(&[10.0, 0.0]);
        // perturbing the retained eigenvalue leaves Δ = 10 − 0
        let a_hat = HermitianMatrix::from_diagonal(&[10.1, 0.0]);
        let DavisKahanOutcome::Checked(r) = check_davis_kahan(&a, &a_hat, 1, 1e-12).unwrap() else {
            panic!()
        };
        assert!((r.delta - 10.0).abs() < 1e-12);
        assert!(r.holds && r.projector_diff_frobenius < 1e-14);

        // perturbing the discarded eigenvalue moves it 0.1 closer: Δ = 9.9
        let a_hat = HermitianMatrix::from_diagonal(&[10.0, 0.1]);
        let DavisKahanOutcome::Checked(r) = check_davis_kahan(&a, &a_hat, 1, 1e-12).unwrap() else {
            panic!()
        };
        assert!((r.delta - 9.9).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn davis_kahan_rotation_oracle() {
        // Â = A + E with E off-diagonal ε: top eigenvector rotates by θ,
        // tan 2θ = 2ε/10; the projector difference has Frobenius norm √2·sin θ.
        let eps = 0.3;
        let a = HermitianMatrix::from_diagonal(&[10.0, 0.0]);
        let a_hat = sym2(10.0, eps, 0.0);
        let DavisKahanOutcome::Checked(r) = check_davis_kahan(&a, &a_hat, 1, 1e-12).unwrap() else {
            panic!()
        };
        let theta = 0.5 * (2.0 * eps / 10.0f64).atan();
        assert!((r.projector_diff_frobenius - 2f64.sqrt() * theta.sin()).abs() < 1e-12);
        assert!((r.projector_diff_operator - theta.sin()).abs() < 1e-12);
        assert!(r.holds);
    }

    fn sym2(a: f64, b: f64, c: f64) -> HermitianMatrix {
        HermitianMatrix::from_parts(2, &[a, b, b, c], &[0.0; 4]).unwrap()
    }

    #[test]
    fn davis_kahan_infeasible() {
        let a = HermitianMatrix::from_diagonal(&[3.0, 2.0, 0.0]);
        let a_hat = HermitianMatrix::from_diagonal(&[3.0, 2.5, 2.2]);
        assert!(matches!(
            check_davis_kahan(&a, &a_hat, 2, 1e-12).unwrap(),
            DavisKahanOutcome::NoAdmissibleDelta { .. }
        ));
    }

    #[test]
    fn davis_kahan_full_split_is_trivial() {
        let a = HermitianMatrix::from_diagonal(&[3.0, 2.0]);
        let a_hat = HermitianMatrix::from_diagonal(&[1.0, 2.5]);
        let DavisKahanOutcome::Checked(r) = check_davis_kahan(&a, &a_hat, 2, 1e-12).unwrap() else {
            panic!()
        };
        assert!(r.delta.is_infinite() && r.holds);
    }
}
