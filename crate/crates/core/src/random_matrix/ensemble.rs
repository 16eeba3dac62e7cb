use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{hermitian_eigenvalues, WeylChamberVector};
use crate::mechanisms::{sample_complex_perturbation, sample_real_perturbation};
use crate::par;
use crate::rng::{lane, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// `(W1 + iW2) + (W1 + iW2)^*`
    Gue,
    /// `W1 + W1^T`
    Goe,
}

impl Ensemble {
    pub fn beta(self) -> u8 {
        match self {
            Ensemble::Gue => 2,
            Ensemble::Goe => 1,
        }
    }

    pub fn from_beta(beta: u8) -> Result<Self> {
        match beta {
            2 => Ok(Ensemble::Gue),
            1 => Ok(Ensemble::Goe),
            b => Err(Error::arg(format!("beta must be 1 or 2, got {b}"))),
        }
    }

    /// Root mean square of an off-diagonal entry of one draw. Dividing the
    /// eigenvalues by this puts the semicircle edge at `2√d`.
    pub fn entry_scale(self) -> f64 {
        match self {
            Ensemble::Gue => 2.0,
            Ensemble::Goe => std::f64::consts::SQRT_2,
        }
    }

    /// One eigenvalue draw.
    pub fn sample_eigenvalues(self, d: usize, rng: &mut SeededRng) -> Result<WeylChamberVector> {
        match self {
            Ensemble::Gue => hermitian_eigenvalues(&sample_complex_perturbation(d, rng)),
            Ensemble::Goe => hermitian_eigenvalues(&sample_real_perturbation(d, rng).to_hermitian()),
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gue" => Ok(Ensemble::Gue),
            "goe" => Ok(Ensemble::Goe),
            other => Err(Error::arg(format!("unknown ensemble {other:?}"))),
        }
    }
}

/// Independent eigenvalue draws from one ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapSampleSet {
    dim: usize,
    ensemble: Ensemble,
    samples: Vec<WeylChamberVector>,
}

impl GapSampleSet {
    /// Wraps externally produced samples (e.g. Dyson terminal states or
    /// synthetic draws). `ensemble` fixes the normalization used downstream.
    pub fn from_samples(ensemble: Ensemble, samples: Vec<WeylChamberVector>) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::Empty("no samples".into()))?;
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Ok(Self { dim, ensemble, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn samples(&self) -> &[WeylChamberVector] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    /// `η_i − η_{i+1}` for every draw, 1-based `i`.
    pub fn gaps_at(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i - 1] - s[i]).collect()
    }

    /// `η_i − η_j` for every draw, 1-based `i < j`.
    pub fn spans(&self, i: usize, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i - 1] - s[j - 1]).collect()
    }
}

/// `n` independent draws; draw `r` uses substream `(seed, r)`.
pub fn sample_ensemble_eigenvalues(d: usize, ensemble: Ensemble, n: usize, seed: u64) -> Result<GapSampleSet> {
    if d < 2 {
        return Err(Error::arg(format!("dimension must be at least 2, got {d}")));
    }
    if n == 0 {
        return Err(Error::arg("need at least one draw"));
    }
    let samples = par::try_map_indexed(n, |r| {
        let mut rng = SeededRng::substream(seed, r as u64, lane::DIRECT);
        ensemble.sample_eigenvalues(d, &mut rng)
    })?;
    GapSampleSet::from_samples(ensemble, samples)
}
