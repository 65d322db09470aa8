//! Simultaneous calibration bands for mean estimates of responses in the
//! exponential dispersion family.
//!
//! Given responses ranked by their (estimated) means, the crate builds, for
//! a chosen confidence level `1 - alpha`, per-observation lower and upper
//! bounds that cover all true means simultaneously with probability at
//! least `1 - alpha`. The bounds come from volume-weighted partial sums of
//! consecutive responses: each ordered index pair `(j, k)` contributes a
//! one-sided bound at tail level `delta = alpha / (2 |J|)`, and the band is
//! the running envelope of those bounds over the ranking.
//!
//! On top of the bands sit two opposite hypothesis tests (calibration as
//! the null, and epsilon-miscalibration as the null), dispersion
//! estimators, weighted quantile binning, and a Yang–Barber style
//! sub-Gaussian comparison band.

pub mod bands;
pub mod bounds;
pub mod calibrate;
pub mod error;
pub mod family;
pub mod isotonic;
pub mod special;

pub use bands::{
    build_band, build_band_at_delta, make_pair_set, make_ranked_sample, merge_ties,
    repair_crossings, yang_barber_band, Band, PairSet, PairStrategy, RankedSample,
};
pub use bounds::{brute_force_bound, lower_bound, upper_bound, BoundQuery, BoundSide};
pub use calibrate::{
    deviance_dispersion, mle_dispersion_ig, pearson_dispersion, quantile_bin, test_calibration,
    test_epsilon, BinnedSample, Decision, TestReport,
};
pub use error::{CalibError, Result};
pub use family::{DispersedObs, EdfFamily, FamilyForm};
pub use isotonic::{pava, IsotonicFit};
