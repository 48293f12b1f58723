//! Robot-side learning: fit the secondary-cue map against primary-cue
//! targets, estimate the conditional-variance proxy from observed pairs, and
//! fuse.

mod fusion;
mod knn;
mod linear;
mod metrics;
mod variance;

pub use fusion::{fuse, FusionModel, Regressor};
pub use knn::{fit_knn, KnnRegressor};
pub use linear::{fit_linear, LinearMap};
pub use metrics::{errors, ErrorSummary};
pub use variance::{
    estimate_conditional_variance_moments, estimate_conditional_variance_windowed, Window,
    VARIANCE_FLOOR,
};
