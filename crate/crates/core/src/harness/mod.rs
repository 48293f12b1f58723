//! Experiment suites: Monte Carlo verification of the closed forms, the
//! sensor case-study protocol, and distribution analysis.

mod case_study;
mod distribution;
mod verification;

pub use case_study::{run_case_study, split_indices, CaseStudyConfig, PrimaryCue, ProxyEstimator, RunReport, RunRow};
pub use distribution::{
    analyze_distribution, chi_square_statistic, default_bin_count, ks_statistic_uniform,
    DistOptions, DistStats, Histogram, DEFAULT_RESAMPLES,
};
pub use verification::{table1_params, verify_theory, VerificationRow, VerifyOptions};

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
