//! Differentially private rank-k covariance approximation through a complex
//! Gaussian perturbation, together with the random-matrix machinery used to
//! check its behaviour empirically: Dyson Brownian motion, GUE/GOE gap
//! statistics, eigenvalue rigidity and utility sweeps.
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise. Every replication draws
//! from its own counter-based RNG substream, so results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyson;
pub mod error;
pub mod experiments;
pub mod hermitian;
pub mod io;
pub mod mechanisms;
pub mod par;
pub mod random_matrix;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use hermitian::{HermitianMatrix, RealSymmetricMatrix, SpectralDecomposition, WeylChamberVector};
pub use mechanisms::{MechanismOutput, PrivacyParams};
pub use rng::SeededRng;
