//! Dyson Brownian motion for the eigenvalues of `Φ(t) = M + B(t)`,
//! `B = W + W^*`.
//!
//! The diagonal entries `B_ii` have variance `4t`, so the eigenvalue SDE that
//! reproduces the law of `Φ(t)` is
//!
//! ```text
//! dγ_i = dB_ii + 2β · Σ_{j≠i} dt / (γ_i − γ_j),    Var(dB_ii) = 4 dt
//! ```
//!
//! (`β = 2` complex, `β = 1` real). Integration is Euler–Maruyama with
//! recursive step halving near collisions; each half step takes half of the
//! Brownian increment, so two runs sharing an increment stream stay coupled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{hermitian_eigenvalues, HermitianMatrix, WeylChamberVector};
use crate::par;
use crate::random_matrix::Ensemble;
use crate::rng::{lane, SeededRng};
use crate::stats::{ks_critical_value, ks_two_sample, mean_and_se};

/// Variance of a diagonal increment per unit time.
pub const DIAGONAL_VARIANCE: f64 = 4.0;
pub const DEFAULT_SUBSTEP_THRESHOLD: f64 = 0.25;
pub const DEFAULT_MAX_SUBSTEP_DEPTH: u32 = 96;
/// Relative spacing used to split tied initial coordinates.
pub const TIE_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonConfig {
    pub dim: usize,
    pub beta: u8,
    pub dt: f64,
    pub t_end: f64,
    /// Halve the step while `|drift|·h` exceeds this fraction of the nearest gap.
    pub substep_gap_threshold: f64,
    pub max_substep_depth: u32,
}

impl DysonConfig {
    pub fn new(dim: usize, beta: u8, dt: f64, t_end: f64) -> Result<Self> {
        let c = Self {
            dim,
            beta,
            dt,
            t_end,
            substep_gap_threshold: DEFAULT_SUBSTEP_THRESHOLD,
            max_substep_depth: DEFAULT_MAX_SUBSTEP_DEPTH,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        if !(self.beta == 1 || self.beta == 2) {
            return Err(Error::arg(format!("beta must be 1 or 2, got {}", self.beta)));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end) {
            return Err(Error::arg(format!(
                "need 0 < dt ≤ t_end, got dt={}, t_end={}",
                self.dt, self.t_end
            )));
        }
        if !(self.substep_gap_threshold > 0.0) || self.max_substep_depth < 1 {
            return Err(Error::arg("sub-stepping threshold and depth must be positive"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    /// Actual step so that the grid ends exactly at `t_end`.
    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps() as f64
    }

    /// Record every `⌈n_steps/1000⌉`-th step plus the final state.
    pub fn record_stride(&self) -> usize {
        self.n_steps().div_ceil(1000).max(1)
    }
}

fn drift_coefficient(beta: u8) -> f64 {
    f64::from(beta) * DIAGONAL_VARIANCE / 2.0
}

/// `c·Σ_{j≠i} 1/(x_i − x_j)` for every `i`.
fn drift(x: &[f64], coefficient: f64, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                s += 1.0 / (x[i] - xj);
            }
        }
        *o = coefficient * s;
    }
}

/// Smallest adjacent gap touching each coordinate.
fn needs_substep(x: &[f64], drift: &[f64], h: f64, threshold: f64) -> bool {
    let d = x.len();
    (0..d).any(|i| {
        let up = if i > 0 { x[i - 1] - x[i] } else { f64::INFINITY };
        let down = if i + 1 < d { x[i] - x[i + 1] } else { f64::INFINITY };
        drift[i].abs() * h > threshold * up.min(down)
    })
}

fn first_violation(x: &[f64]) -> Option<(usize, f64)> {
    x.windows(2)
        .enumerate()
        .find(|(_, w)| !(w[0] > w[1]))
        .map(|(i, w)| (i, w[0] - w[1]))
}

struct Stepper {
    coefficient: f64,
    threshold: f64,
    max_depth: u32,
    scratch: Vec<Vec<f64>>,
}

impl Stepper {
    fn new(dim: usize, beta: u8, threshold: f64, max_depth: u32) -> Self {
        Self {
            coefficient: drift_coefficient(beta),
            threshold,
            max_depth,
            scratch: vec![vec![0.0; dim]; 2],
        }
    }

    fn advance(&mut self, x: &mut [f64], dw: &[f64], h: f64, depth: u32) -> std::result::Result<(), (usize, f64)> {
        let mut dr = std::mem::take(&mut self.scratch[0]);
        drift(x, self.coefficient, &mut dr);
        let split = depth < self.max_depth && needs_substep(x, &dr, h, self.threshold);
        if !split {
            let mut trial = std::mem::take(&mut self.scratch[1]);
            for i in 0..x.len() {
                trial[i] = x[i] + dw[i] + dr[i] * h;
            }
            let bad = first_violation(&trial);
            if bad.is_none() {
                x.copy_from_slice(&trial);
            }
            self.scratch[0] = dr;
            self.scratch[1] = trial;
            match bad {
                None => return Ok(()),
                Some(v) if depth >= self.max_depth => return Err(v),
                Some(_) => {}
            }
        } else {
            self.scratch[0] = dr;
        }
        let half: Vec<f64> = dw.iter().map(|w| 0.5 * w).collect();
        self.advance(x, &half, 0.5 * h, depth + 1)?;
        self.advance(x, &half, 0.5 * h, depth + 1)
    }
}

/// One Euler–Maruyama step `γ_i ← γ_i + dW_i + 2β·Σ_{j≠i} dt/(γ_i − γ_j)`,
/// with default sub-stepping.
pub fn dyson_step(state: &WeylChamberVector, dw: &[f64], dt: f64, beta: u8) -> Result<WeylChamberVector> {
    dyson_step_with(
        state,
        dw,
        dt,
        beta,
        DEFAULT_SUBSTEP_THRESHOLD,
        DEFAULT_MAX_SUBSTEP_DEPTH,
    )
}

pub fn dyson_step_with(
    state: &WeylChamberVector,
    dw: &[f64],
    dt: f64,
    beta: u8,
    threshold: f64,
    max_depth: u32,
) -> Result<WeylChamberVector> {
    if dw.len() != state.len() {
        return Err(Error::DimensionMismatch {
            expected: state.len(),
            actual: dw.len(),
        });
    }
    if !(beta == 1 || beta == 2) {
        return Err(Error::arg(format!("beta must be 1 or 2, got {beta}")));
    }
    if !state.is_strictly_decreasing() {
        return Err(Error::arg("state must be strictly decreasing"));
    }
    let mut x = state.as_slice().to_vec();
    let mut stepper = Stepper::new(x.len(), beta, threshold, max_depth);
    stepper
        .advance(&mut x, dw, dt, 0)
        .map_err(|(index, gap)| Error::IntegrationFailure { time: dt, index, gap })?;
    Ok(WeylChamberVector::new_unchecked(x))
}

/// Restores strict ordering of tied coordinates: `x_i − i·ε` with
/// `ε = TIE_JITTER·max(1, max|x|)`. Already strictly decreasing input is
/// returned unchanged.
pub fn separate_ties(x: &WeylChamberVector) -> WeylChamberVector {
    if x.is_strictly_decreasing() {
        return x.clone();
    }
    let scale = x.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let eps = TIE_JITTER * scale;
    WeylChamberVector::new_unchecked(
        x.as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| v - i as f64 * eps)
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DysonTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<WeylChamberVector>,
    pub config: DysonConfig,
    pub seed: Option<crate::rng::SeedRecord>,
}

impl DysonTrajectory {
    pub fn terminal(&self) -> &WeylChamberVector {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

fn integrate(
    gamma0: &WeylChamberVector,
    config: &DysonConfig,
    noise: &mut dyn FnMut(&mut [f64]),
    record: bool,
) -> Result<(Vec<f64>, Vec<WeylChamberVector>)> {
    config.validate()?;
    if gamma0.len() != config.dim {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            actual: gamma0.len(),
        });
    }
    let start = separate_ties(gamma0);
    let mut x = start.as_slice().to_vec();
    let n = config.n_steps();
    let h = config.step();
    let stride = config.record_stride();
    let mut stepper = Stepper::new(
        config.dim,
        config.beta,
        config.substep_gap_threshold,
        config.max_substep_depth,
    );
    let mut dw = vec![0.0; config.dim];
    let mut times = vec![0.0];
    let mut states = vec![start];
    for k in 1..=n {
        noise(&mut dw);
        stepper
            .advance(&mut x, &dw, h, 0)
            .map_err(|(index, gap)| Error::IntegrationFailure {
                time: k as f64 * h,
                index,
                gap,
            })?;
        if record && (k % stride == 0 || k == n) {
            times.push(k as f64 * h);
            states.push(WeylChamberVector::new_unchecked(x.clone()));
        }
    }
    if !record {
        times.push(n as f64 * h);
        states.push(WeylChamberVector::new_unchecked(x));
    }
    Ok((times, states))
}

fn gaussian_increments(rng: &mut SeededRng, sd: f64) -> impl FnMut(&mut [f64]) + '_ {
    move |dw: &mut [f64]| {
        for w in dw.iter_mut() {
            *w = sd * rng.normal();
        }
    }
}

/// Integrates from `gamma0` on the uniform grid; records a thinned trajectory.
pub fn simulate(gamma0: &WeylChamberVector, config: &DysonConfig, rng: &mut SeededRng) -> Result<DysonTrajectory> {
    let seed = Some(rng.record());
    let sd = (DIAGONAL_VARIANCE * config.step()).sqrt();
    let mut noise = gaussian_increments(rng, sd);
    let (times, states) = integrate(gamma0, config, &mut noise, true)?;
    Ok(DysonTrajectory {
        times,
        states,
        config: *config,
        seed,
    })
}

/// Like [`simulate`] with a caller-supplied increment stream; `noise` fills
/// the `d` diagonal increments of each step.
pub fn simulate_with_noise(
    gamma0: &WeylChamberVector,
    config: &DysonConfig,
    noise: &mut dyn FnMut(&mut [f64]),
) -> Result<DysonTrajectory> {
    let (times, states) = integrate(gamma0, config, noise, true)?;
    Ok(DysonTrajectory {
        times,
        states,
        config: *config,
        seed: None,
    })
}

/// Terminal state only, without recording.
pub fn simulate_terminal(
    gamma0: &WeylChamberVector,
    config: &DysonConfig,
    rng: &mut SeededRng,
) -> Result<WeylChamberVector> {
    let sd = (DIAGONAL_VARIANCE * config.step()).sqrt();
    let mut noise = gaussian_increments(rng, sd);
    let (_, mut states) = integrate(gamma0, config, &mut noise, false)?;
    Ok(states.pop().expect("terminal state"))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupledPair {
    pub gamma: DysonTrajectory,
    pub xi: DysonTrajectory,
    /// Whether `ξ(0)` gaps were all ≤ `γ(0)` gaps (the comparison hypothesis).
    pub initial_gaps_ordered: bool,
}

/// Two trajectories driven by the identical diagonal increments.
pub fn simulate_coupled(
    gamma0: &WeylChamberVector,
    xi0: &WeylChamberVector,
    config: &DysonConfig,
    rng: &mut SeededRng,
) -> Result<CoupledPair> {
    config.validate()?;
    if xi0.len() != config.dim {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            actual: xi0.len(),
        });
    }
    let seed = Some(rng.record());
    let n = config.n_steps();
    let sd = (DIAGONAL_VARIANCE * config.step()).sqrt();
    let increments: Vec<f64> = (0..n * config.dim).map(|_| sd * rng.normal()).collect();
    let (gt, gs) = integrate(gamma0, config, &mut replay(&increments), true)?;
    let (xt, xs) = integrate(xi0, config, &mut replay(&increments), true)?;
    let initial_gaps_ordered = xs[0].gaps().iter().zip(gs[0].gaps()).all(|(a, b)| *a <= b);
    Ok(CoupledPair {
        gamma: DysonTrajectory {
            times: gt,
            states: gs,
            config: *config,
            seed,
        },
        xi: DysonTrajectory {
            times: xt,
            states: xs,
            config: *config,
            seed,
        },
        initial_gaps_ordered,
    })
}

fn replay(buf: &[f64]) -> impl FnMut(&mut [f64]) + '_ {
    let mut k = 0usize;
    move |dw: &mut [f64]| {
        let d = dw.len();
        dw.copy_from_slice(&buf[k * d..(k + 1) * d]);
        k += 1;
    }
}

/// Eigenvalues of `M + √t·G`, `G` drawn from the GUE (`β = 2`) or GOE
/// (`β = 1`) perturbation sampler.
pub fn matrix_process_eigs(m: &HermitianMatrix, t: f64, beta: u8, rng: &mut SeededRng) -> Result<WeylChamberVector> {
    if !(t > 0.0) {
        return Err(Error::arg("t must be positive"));
    }
    let ensemble = Ensemble::from_beta(beta)?;
    let g = match ensemble {
        Ensemble::Gue => crate::mechanisms::sample_complex_perturbation(m.dim(), rng),
        Ensemble::Goe => crate::mechanisms::sample_real_perturbation(m.dim(), rng).to_hermitian(),
    };
    hermitian_eigenvalues(&m.add(&g.scale(t.sqrt()))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub violations: usize,
    pub comparisons: usize,
    pub fraction: f64,
    /// Largest `ξ-gap − γ-gap` observed (may be negative when none exceed).
    pub worst_excess: f64,
}

/// Counts recorded `(time, index)` pairs with `ξ_i − ξ_{i+1} > γ_i − γ_{i+1} + tol`.
pub fn gap_order_violations(pair: &CoupledPair, tol: f64) -> ViolationReport {
    let mut violations = 0;
    let mut comparisons = 0;
    let mut worst = f64::NEG_INFINITY;
    for (g, x) in pair.gamma.states.iter().zip(&pair.xi.states) {
        for (gg, xg) in g.gaps().iter().zip(x.gaps()) {
            let excess = xg - gg;
            worst = worst.max(excess);
            comparisons += 1;
            if excess > tol {
                violations += 1;
            }
        }
    }
    ViolationReport {
        violations,
        comparisons,
        fraction: if comparisons == 0 {
            0.0
        } else {
            violations as f64 / comparisons as f64
        },
        worst_excess: worst,
    }
}

/// Aggregate over many coupled pairs.
pub fn merge_violations(reports: &[ViolationReport]) -> ViolationReport {
    let violations = reports.iter().map(|r| r.violations).sum();
    let comparisons: usize = reports.iter().map(|r| r.comparisons).sum();
    ViolationReport {
        violations,
        comparisons,
        fraction: if comparisons == 0 {
            0.0
        } else {
            violations as f64 / comparisons as f64
        },
        worst_excess: reports.iter().map(|r| r.worst_excess).fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub dim: usize,
    pub beta: u8,
    pub t: f64,
    pub dt: f64,
    pub gap_index: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub critical_value_5pct: f64,
    pub n_sde: usize,
    pub n_direct: usize,
    pub mean_gap_sde: f64,
    pub mean_gap_direct: f64,
}

/// Middle gap `γ_{⌊d/2⌋} − γ_{⌊d/2⌋+1}` at time `t` from `n` SDE runs started
/// at zero against `n` direct draws of `√t·G`; two-sample KS distance.
pub fn equilibrium_consistency(d: usize, t: f64, n: usize, beta: u8, dt: f64, seed: u64) -> Result<EquilibriumReport> {
    if d < 2 {
        return Err(Error::arg("need d ≥ 2"));
    }
    if n < 100 {
        return Err(Error::arg(format!("need at least 100 samples, got {n}")));
    }
    let config = DysonConfig::new(d, beta, dt, t)?;
    let mid = d / 2;
    let zero = WeylChamberVector::zeros(d);
    let sde = par::try_map_indexed(n, |r| {
        let mut rng = SeededRng::substream(seed, r as u64, lane::SDE);
        simulate_terminal(&zero, &config, &mut rng).map(|s| s[mid - 1] - s[mid])
    })?;
    let direct = middle_gaps_direct(d, t, n, beta, seed)?;
    let ks = ks_two_sample(&sde, &direct);
    Ok(EquilibriumReport {
        dim: d,
        beta,
        t,
        dt: config.step(),
        gap_index: mid,
        ks_statistic: ks.statistic,
        p_value: ks.p_value,
        critical_value_5pct: ks_critical_value(0.05, n, n),
        n_sde: n,
        n_direct: n,
        mean_gap_sde: mean_and_se(&sde).0,
        mean_gap_direct: mean_and_se(&direct).0,
    })
}

/// Middle gaps of `n` direct draws of `√t·G` (substreams `(seed, r)`).
pub fn middle_gaps_direct(d: usize, t: f64, n: usize, beta: u8, seed: u64) -> Result<Vec<f64>> {
    let mid = d / 2;
    let zero = HermitianMatrix::zeros(d);
    par::try_map_indexed(n, |r| {
        let mut rng = SeededRng::substream(seed, r as u64, lane::DIRECT);
        matrix_process_eigs(&zero, t, beta, &mut rng).map(|s| s[mid - 1] - s[mid])
    })
}
