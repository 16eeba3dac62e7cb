use serde::{Deserialize, Serialize};

use super::ensemble::GapSampleSet;
use crate::error::{Error, Result};
use crate::stats::{linear_fit, wilson_interval, Z_95};

/// Log-spaced grid density used for CDF tables and tail fits.
pub const GRID_PER_DECADE: usize = 12;
pub const MIN_HITS_PER_POINT: usize = 20;
pub const MIN_FIT_POINTS: usize = 5;

/// `s_min · 10^{k/per_decade}` for `k = 0, 1, …` up to `s_max` inclusive.
pub fn log_grid(s_min: f64, s_max: f64, per_decade: usize) -> Vec<f64> {
    let decades = (s_max / s_min).log10();
    let steps = (decades * per_decade as f64 + 1e-9).floor() as usize;
    (0..=steps)
        .map(|k| s_min * 10f64.powf(k as f64 / per_decade as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub s: f64,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCdfTable {
    pub index: usize,
    pub scale: f64,
    pub n: usize,
    pub rows: Vec<CdfRow>,
}

fn check_index(set: &GapSampleSet, i: usize) -> Result<()> {
    if i == 0 || i >= set.dim() {
        return Err(Error::arg(format!("gap index must lie in 1..{}, got {i}", set.dim())));
    }
    Ok(())
}

fn cdf_rows(values: &[f64], scale: f64, grid: &[f64]) -> Vec<CdfRow> {
    let mut sorted: Vec<f64> = values.iter().map(|g| g / scale).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    grid.iter()
        .map(|&s| {
            let hits = sorted.partition_point(|g| *g <= s);
            let (ci_lo, ci_hi) = wilson_interval(hits, n, Z_95);
            CdfRow {
                s,
                hits,
                p_hat: hits as f64 / n as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect()
}

/// `P̂(η_i − η_{i+1} ≤ s·scale)` at the given `s` values.
pub fn empirical_gap_cdf_at(set: &GapSampleSet, i: usize, scale: f64, grid: &[f64]) -> Result<GapCdfTable> {
    check_index(set, i)?;
    if !(scale > 0.0) {
        return Err(Error::arg("scale must be positive"));
    }
    Ok(GapCdfTable {
        index: i,
        scale,
        n: set.count(),
        rows: cdf_rows(&set.gaps_at(i), scale, grid),
    })
}

/// Empirical gap CDF on the default grid `s ∈ [1e-3, 1e1]`, 12 points per decade.
pub fn empirical_gap_cdf(set: &GapSampleSet, i: usize, scale: f64) -> Result<GapCdfTable> {
    empirical_gap_cdf_at(set, i, scale, &log_grid(1e-3, 1e1, GRID_PER_DECADE))
}

/// Which grid points enter the log-log tail fit.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitRange {
    /// Grid points with `s_lo ≤ s ≤ s_hi`.
    Explicit { s_lo: f64, s_hi: f64 },
    /// Grid points whose `P̂` lies in `[p_lo, p_hi]`.
    Probability { p_lo: f64, p_hi: f64 },
}

impl Default for FitRange {
    fn default() -> Self {
        FitRange::Probability { p_lo: 2e-3, p_hi: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapTailEstimate {
    pub index: usize,
    /// Fitted exponent of `P̂(gap ≤ s) ∝ s^slope`.
    pub slope: f64,
    pub intercept: f64,
    pub fit_range: (f64, f64),
    pub r_squared: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TailFit {
    Estimate(GapTailEstimate),
    /// Fewer than `MIN_FIT_POINTS` grid points with `MIN_HITS_PER_POINT` hits.
    Underpowered {
        hits: Vec<(f64, usize)>,
    },
}

impl TailFit {
    pub fn estimate(&self) -> Option<&GapTailEstimate> {
        match self {
            TailFit::Estimate(e) => Some(e),
            TailFit::Underpowered { .. } => None,
        }
    }
}

/// Least-squares slope of `ln P̂` against `ln s` over the tail, with `s` in
/// units of `scale`.
pub fn gap_tail_exponent(set: &GapSampleSet, i: usize, scale: f64, range: FitRange) -> Result<TailFit> {
    let table = empirical_gap_cdf_at(set, i, scale, &log_grid(1e-4, 1e1, GRID_PER_DECADE))?;
    let in_range: Vec<&CdfRow> = table
        .rows
        .iter()
        .filter(|r| match range {
            FitRange::Explicit { s_lo, s_hi } => r.s >= s_lo && r.s <= s_hi,
            FitRange::Probability { p_lo, p_hi } => r.p_hat >= p_lo && r.p_hat <= p_hi,
        })
        .collect();
    let usable: Vec<&&CdfRow> = in_range.iter().filter(|r| r.hits >= MIN_HITS_PER_POINT).collect();
    if usable.len() < MIN_FIT_POINTS {
        return Ok(TailFit::Underpowered {
            hits: in_range.iter().map(|r| (r.s, r.hits)).collect(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|r| r.s.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.p_hat.ln()).collect();
    let fit = linear_fit(&xs, &ys).ok_or_else(|| Error::arg("degenerate fit"))?;
    Ok(TailFit::Estimate(GapTailEstimate {
        index: i,
        slope: fit.slope,
        intercept: fit.intercept,
        fit_range: (usable[0].s, usable[usable.len() - 1].s),
        r_squared: fit.r_squared,
        n_points: usable.len(),
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct SumGapReport {
    pub i: usize,
    pub j: usize,
    pub s: f64,
    /// `P̂(η_i − η_j ≤ ½(j − i)·s·scale)`
    pub lhs: f64,
    /// `2·max_{i≤ℓ<j} P̂(η_ℓ − η_{ℓ+1} ≤ s·scale)`
    pub rhs: f64,
    /// Upper Wilson bound of the lhs minus lower Wilson bound of the rhs.
    pub ci_slack: f64,
    pub holds: bool,
    /// Fewer than `MIN_HITS_PER_POINT` hits behind the rhs maximum.
    pub underpowered: bool,
}

/// Empirical form of the aggregation bound
/// `P(Σ_ℓ X_ℓ ≤ ½ r s) ≤ 2 max_ℓ P(X_ℓ ≤ s)` applied to the `r = j − i`
/// consecutive gaps between `η_i` and `η_j`.
pub fn sum_gap_probability_check(set: &GapSampleSet, i: usize, j: usize, s: f64, scale: f64) -> Result<SumGapReport> {
    check_index(set, i)?;
    if j <= i || j > set.dim() {
        return Err(Error::arg(format!("need i < j ≤ d, got i={i}, j={j}")));
    }
    let n = set.count();
    let threshold = 0.5 * (j - i) as f64 * s * scale;
    let lhs_hits = set.spans(i, j).iter().filter(|x| **x <= threshold).count();
    let rhs_hits = (i..j)
        .map(|l| set.gaps_at(l).iter().filter(|g| **g <= s * scale).count())
        .max()
        .unwrap_or(0);
    let lhs = lhs_hits as f64 / n as f64;
    let rhs = 2.0 * rhs_hits as f64 / n as f64;
    let lhs_hi = wilson_interval(lhs_hits, n, Z_95).1;
    let rhs_lo = 2.0 * wilson_interval(rhs_hits, n, Z_95).0;
    Ok(SumGapReport {
        i,
        j,
        s,
        lhs,
        rhs,
        ci_slack: lhs_hi - rhs_lo,
        holds: lhs <= rhs,
        underpowered: rhs_hits < MIN_HITS_PER_POINT,
    })
}
