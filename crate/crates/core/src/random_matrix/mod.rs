//! GUE/GOE eigenvalue sampling and the statistics built on it: semicircle
//! classical locations, gap CDFs and tail exponents, rigidity, and the
//! unnormalized joint eigenvalue density.

mod density;
mod ensemble;
mod gaps;
mod rigidity;
mod semicircle;

pub use density::{joint_density_log, LogDensity};
pub use ensemble::{sample_ensemble_eigenvalues, Ensemble, GapSampleSet};
pub use gaps::{
    empirical_gap_cdf, empirical_gap_cdf_at, gap_tail_exponent, log_grid, sum_gap_probability_check, CdfRow, FitRange,
    GapCdfTable, GapTailEstimate, SumGapReport, TailFit, GRID_PER_DECADE, MIN_FIT_POINTS, MIN_HITS_PER_POINT,
};
pub use rigidity::{rigidity_deviation, rigidity_statistic, RigidityFactor, RigidityReport};
pub use semicircle::{
    classical_gap_bounds_check, classical_locations, semicircle_density, semicircle_upper_tail, ClassicalGapReport,
    ClassicalLocations,
};
