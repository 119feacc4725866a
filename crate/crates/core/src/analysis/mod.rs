//! Deterministic numerics and statistics: fixed points of the giant
//! component equations, the quartic limit law, regression, goodness of fit,
//! and the random-graph moment battery.

mod fit;
mod fixed;
mod limit;
mod moments;
mod stats;

pub use fit::{linear_fit, power_law_fit, semilog_fit, LinearFit};
pub use fixed::{beta, gamma0, phi, FixedPointResult, FIXED_POINT_TOLERANCE};
pub use limit::{
    kolmogorov_survival, ks_discrete_vs_cdf, ks_statistic, ks_two_sample, limit_cdf, limit_density,
    limit_median, limit_normalizer, limit_normalizer_closed_form, TwoSampleKs,
};
pub use moments::{
    moment_battery, Comparison, MomentRecord, MomentReport, MomentSettings, RecordStatus,
};
pub use stats::{wilson_interval, RunningStats};
