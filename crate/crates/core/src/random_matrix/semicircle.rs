use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::WeylChamberVector;

const BISECTION_MAX_ITER: usize = 200;

/// `ρ(x) = √(max(4 − x², 0)) / 2π`.
pub fn semicircle_density(x: f64) -> f64 {
    (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
}

/// `∫_x^∞ ρ`, in closed form.
pub fn semicircle_upper_tail(x: f64) -> f64 {
    if x >= 2.0 {
        return 0.0;
    }
    if x <= -2.0 {
        return 1.0;
    }
    0.5 - x * (4.0 - x * x).sqrt() / (4.0 * PI) - (x / 2.0).asin() / PI
}

/// Semicircle quantiles `ω_1 > … > ω_d > ω_{d+1}` scaled by `√d`, with
/// `d·∫_{ω_i/√d}^∞ ρ = i − 1` and `ω_{d+1} = −2√d`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalLocations {
    dim: usize,
    omega: WeylChamberVector,
}

impl ClassicalLocations {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `d + 1` locations, 0-based (`omega()[0]` is `ω_1`).
    pub fn omega(&self) -> &[f64] {
        self.omega.as_slice()
    }

    /// `ω_i` for 1-based `i ∈ 1..=d+1`.
    pub fn at(&self, i: usize) -> f64 {
        self.omega[i - 1]
    }

    /// `|d·∫_{ω_i/√d}^∞ ρ − (i − 1)|` for `i ∈ 1..=d`.
    pub fn quantile_residuals(&self) -> Vec<f64> {
        let d = self.dim as f64;
        (1..=self.dim)
            .map(|i| (d * semicircle_upper_tail(self.at(i) / d.sqrt()) - (i - 1) as f64).abs())
            .collect()
    }
}

pub fn classical_locations(d: usize) -> Result<ClassicalLocations> {
    if d == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let df = d as f64;
    let root = df.sqrt();
    let mut omega = Vec::with_capacity(d + 1);
    omega.push(2.0 * root);
    for i in 2..=d {
        let target = (i - 1) as f64 / df;
        omega.push(root * bisect_tail(target)?);
    }
    omega.push(-2.0 * root);
    let omega = WeylChamberVector::new(omega)?;
    if !omega.is_strictly_decreasing() {
        return Err(Error::arg(format!(
            "classical locations not strictly decreasing for d={d}"
        )));
    }
    Ok(ClassicalLocations { dim: d, omega })
}

/// Solves `∫_x^∞ ρ = target` on `[−2, 2]`.
fn bisect_tail(target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        // tail is decreasing in x
        if semicircle_upper_tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BisectionNonConvergence {
        iterations: BISECTION_MAX_ITER,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalGapReport {
    pub dim: usize,
    /// 1-based indices `i` where `ω_i − ω_{i+1}` leaves its bounds.
    pub violations: Vec<usize>,
    /// `min_i gap_i / lower_i` (≥ 1 when the lower bound holds everywhere).
    pub min_lower_ratio: f64,
    /// `max_i gap_i / upper_i` (≤ 1 when the upper bound holds everywhere).
    pub max_upper_ratio: f64,
}

impl ClassicalGapReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d^{−1/6} m_i^{−1/3} ≤ ω_i − ω_{i+1} ≤ 2π d^{−1/6} m_i^{−1/3}` with
/// `m_i = min(i, d − i + 1)`, for `i ∈ 1..=d`.
pub fn classical_gap_bounds_check(loc: &ClassicalLocations) -> ClassicalGapReport {
    let d = loc.dim();
    let df = d as f64;
    let mut violations = Vec::new();
    let mut min_lower = f64::INFINITY;
    let mut max_upper = 0.0f64;
    for i in 1..=d {
        let gap = loc.at(i) - loc.at(i + 1);
        let m = i.min(d - i + 1) as f64;
        let lower = df.powf(-1.0 / 6.0) * m.powf(-1.0 / 3.0);
        let upper = 2.0 * PI * lower;
        min_lower = min_lower.min(gap / lower);
        max_upper = max_upper.max(gap / upper);
        if gap < lower || gap > upper {
            violations.push(i);
        }
    }
    ClassicalGapReport {
        dim: d,
        violations,
        min_lower_ratio: min_lower,
        max_upper_ratio: max_upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature, independent of the closed-form tail.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            eps: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, eps, 60)
    }

    #[test]
    fn density_values() {
        assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_density(-2.0), 0.0);
        assert_eq!(semicircle_density(3.0), 0.0);
    }

    #[test]
    fn density_integrates_to_one() {
        let total = simpson(&semicircle_density, -2.0, 2.0, 1e-13);
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn closed_form_tail_matches_quadrature() {
        for x in [-1.9, -1.0, -0.3, 0.0, 0.4, 1.2, 1.99] {
            let q = simpson(&semicircle_density, x, 2.0, 1e-13);
            assert!((semicircle_upper_tail(x) - q).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn first_and_last_locations() {
        for d in [1, 2, 3, 10, 100] {
            let loc = classical_locations(d).unwrap();
            assert_eq!(loc.at(1), 2.0 * (d as f64).sqrt());
            assert_eq!(loc.at(d + 1), -2.0 * (d as f64).sqrt());
            assert_eq!(loc.omega().len(), d + 1);
        }
    }

    #[test]
    fn median_for_d_two() {
        let loc = classical_locations(2).unwrap();
        assert!(loc.at(2).abs() < 1e-12);
    }

    #[test]
    fn d_four_second_location_matches_quadrature_bisection() {
        // oracle: bisection on the Simpson-integrated tail, ∫_{x*}^2 ρ = 1/4
        let (mut lo, mut hi) = (-2.0, 2.0);
        for _ in 0..80 {
            let mid: f64 = 0.5 * (lo + hi);
            if simpson(&semicircle_density, mid, 2.0, 1e-14) > 0.25 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 2.0 * 0.5 * (lo + hi);
        let loc = classical_locations(4).unwrap();
        assert!((loc.at(2) - oracle).abs() < 1e-9);
        // frozen value of the oracle run
        assert!((loc.at(2) - 1.615_891_013_2).abs() < 1e-9, "{}", loc.at(2));
    }

    #[test]
    fn residuals_small() {
        for d in [8, 64, 512] {
            let loc = classical_locations(d).unwrap();
            assert!(loc.quantile_residuals().iter().all(|r| *r <= 1e-9));
        }
    }

    #[test]
    fn gap_bounds_hold() {
        for d in [1, 2, 8, 16, 32, 64, 128, 500] {
            let r = classical_gap_bounds_check(&classical_locations(d).unwrap());
            assert!(r.holds(), "d={d}: {r:?}");
            assert!(r.min_lower_ratio >= 1.0 && r.max_upper_ratio <= 1.0);
        }
    }
}
