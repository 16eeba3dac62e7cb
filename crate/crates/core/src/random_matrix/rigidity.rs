use serde::Serialize;

use super::ensemble::GapSampleSet;
use super::semicircle::ClassicalLocations;
use crate::error::{Error, Result};

/// `(ln d)^{L·ln ln d}`; `L` defaults to 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RigidityFactor {
    pub dim: usize,
    pub l: f64,
    pub value: f64,
}

impl RigidityFactor {
    pub fn new(dim: usize, l: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::arg("rigidity factor needs d ≥ 2"));
        }
        if !(l > 0.0) {
            return Err(Error::arg("L must be positive"));
        }
        let ln_d = (dim as f64).ln();
        Ok(Self {
            dim,
            l,
            value: ln_d.powf(l * ln_d.ln()),
        })
    }

    pub fn with_default(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0)
    }
}

/// `max_i |η_i − ω_i|·min(i, d−i+1)^{1/3}·d^{1/6}` for one normalized draw.
pub fn rigidity_deviation(eta: &[f64], omega: &[f64]) -> f64 {
    let d = eta.len();
    let df = d as f64;
    eta.iter()
        .zip(omega)
        .enumerate()
        .map(|(k, (e, w))| {
            let i = k + 1;
            let m = i.min(d - i + 1) as f64;
            (e - w).abs() * m.cbrt() * df.powf(1.0 / 6.0)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub dim: usize,
    pub n: usize,
    pub threshold: f64,
    pub exceedances: usize,
    pub exceedance_fraction: f64,
    pub mean: f64,
    pub median: f64,
    pub q99: f64,
    pub max: f64,
}

/// Distribution of the normalized deviation statistic over the draws, after
/// dividing eigenvalues by the ensemble's entry scale.
pub fn rigidity_statistic(set: &GapSampleSet, loc: &ClassicalLocations, rf: &RigidityFactor) -> Result<RigidityReport> {
    if loc.dim() != set.dim() || rf.dim != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            actual: loc.dim(),
        });
    }
    let scale = set.ensemble().entry_scale();
    let omega = &loc.omega()[..set.dim()];
    let mut stats: Vec<f64> = set
        .samples()
        .iter()
        .map(|s| {
            let eta: Vec<f64> = s.as_slice().iter().map(|x| x / scale).collect();
            rigidity_deviation(&eta, omega)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let exceedances = stats.iter().filter(|x| **x > rf.value).count();
    let quantile = |q: f64| stats[((q * (n - 1) as f64).round() as usize).min(n - 1)];
    Ok(RigidityReport {
        dim: set.dim(),
        n,
        threshold: rf.value,
        exceedances,
        exceedance_fraction: exceedances as f64 / n as f64,
        mean: stats.iter().sum::<f64>() / n as f64,
        median: quantile(0.5),
        q99: quantile(0.99),
        max: stats[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::super::{classical_locations, sample_ensemble_eigenvalues, Ensemble};
    use super::*;

    #[test]
    fn factor_values() {
        let rf = RigidityFactor::with_default(64).unwrap();
        let ln = 64f64.ln();
        assert!((rf.value - ln.powf(ln.ln())).abs() < 1e-12);
        for d in 3..200 {
            assert!(RigidityFactor::with_default(d).unwrap().value >= 1.0);
        }
        assert!(RigidityFactor::with_default(1).is_err());
    }

    #[test]
    fn deviation_nonnegative_and_homogeneous() {
        let loc = classical_locations(6).unwrap();
        let omega = &loc.omega()[..6];
        let eta = [5.1, 2.0, 0.3, -0.1, -2.2, -4.9];
        let base = rigidity_deviation(&eta, omega);
        assert!(base >= 0.0);
        let eta2: Vec<f64> = eta.iter().map(|x| 2.0 * x).collect();
        let omega2: Vec<f64> = omega.iter().map(|x| 2.0 * x).collect();
        assert!((rigidity_deviation(&eta2, &omega2) - 2.0 * base).abs() < 1e-12);
        assert_eq!(rigidity_deviation(omega, omega), 0.0);
    }

    #[test]
    fn small_gue_run() {
        let d = 16;
        let set = sample_ensemble_eigenvalues(d, Ensemble::Gue, 300, 5).unwrap();
        let r = rigidity_statistic(
            &set,
            &classical_locations(d).unwrap(),
            &RigidityFactor::with_default(d).unwrap(),
        )
        .unwrap();
        assert_eq!(r.n, 300);
        assert!(r.mean > 0.0 && r.median <= r.q99 && r.q99 <= r.max);
        assert!(rigidity_statistic(
            &set,
            &classical_locations(8).unwrap(),
            &RigidityFactor::with_default(d).unwrap()
        )
        .is_err());
    }
}
