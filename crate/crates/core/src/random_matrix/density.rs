use crate::error::{Error, Result};
use crate::hermitian::WeylChamberVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Finite(f64),
    /// Repeated coordinates: the density vanishes, log is `−∞`.
    Degenerate,
}

impl LogDensity {
    pub fn value(self) -> f64 {
        match self {
            LogDensity::Finite(v) => v,
            LogDensity::Degenerate => f64::NEG_INFINITY,
        }
    }
}

/// `β·Σ_{i<j} ln|η_i − η_j| − ½Σ η_i²`, without the normalizing constant.
pub fn joint_density_log(eta: &WeylChamberVector, beta: u8) -> Result<LogDensity> {
    if !(beta == 1 || beta == 2) {
        return Err(Error::arg(format!("beta must be 1 or 2, got {beta}")));
    }
    let x = eta.as_slice();
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let diff = (x[i] - x[j]).abs();
            if diff == 0.0 {
                return Ok(LogDensity::Degenerate);
            }
            acc += f64::from(beta) * diff.ln();
        }
    }
    acc -= 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    Ok(LogDensity::Finite(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeylChamberVector {
        WeylChamberVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(joint_density_log(&w(&[0.0]), 2).unwrap(), LogDensity::Finite(0.0));
        let v = joint_density_log(&w(&[1.0, -1.0]), 2).unwrap().value();
        assert!((v - (4f64.ln() - 1.0)).abs() < 1e-15);
        assert_eq!(joint_density_log(&w(&[1.0, 1.0]), 1).unwrap(), LogDensity::Degenerate);
        assert!(joint_density_log(&w(&[1.0]), 3).is_err());
    }

    #[test]
    fn ratio_matches_direct_product() {
        let a = [1.7, 0.2, -0.9];
        let b = [0.5, 0.1, -2.0];
        let direct = |x: &[f64], beta: i32| {
            let mut p = 1.0;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    p *= (x[i] - x[j]).abs().powi(beta);
                }
            }
            p * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
        };
        for beta in [1u8, 2] {
            let ratio = (joint_density_log(&w(&a), beta).unwrap().value()
                - joint_density_log(&w(&b), beta).unwrap().value())
            .exp();
            let oracle = direct(&a, beta as i32) / direct(&b, beta as i32);
            assert!((ratio - oracle).abs() < 1e-12 * oracle.max(1.0));
        }
    }

    #[test]
    fn permutation_consistent() {
        let sorted = [2.5, 0.4, -0.3, -1.1];
        let shuffled = vec![-0.3, 2.5, -1.1, 0.4];
        let a = joint_density_log(&w(&sorted), 2).unwrap();
        let b = joint_density_log(&WeylChamberVector::from_unsorted(shuffled).unwrap(), 2).unwrap();
        assert_eq!(a, b);
    }
}
