use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Lower clamp for variance estimates, in squared target units.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Which pairs count as "`x_g` near zero" for the windowed estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Window {
    /// Closed interval `[lo, hi]` on `x_g`.
    Fixed { lo: f64, hi: f64 },
    /// The central `percent`% of the observed `x_g` values.
    CentralQuantile { percent: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Fixed { lo: -0.05, hi: 0.05 }
    }
}

impl Window {
    fn bounds(&self, x_g: &[f64]) -> Result<(f64, f64)> {
        match *self {
            Window::Fixed { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidParams(format!("empty window [{lo}, {hi}]")));
                }
                Ok((lo, hi))
            }
            Window::CentralQuantile { percent } => {
                if !(percent > 0.0 && percent <= 100.0) {
                    return Err(Error::InvalidParams(format!(
                        "window percent must be in (0, 100], got {percent}"
                    )));
                }
                if x_g.is_empty() {
                    return Err(Error::InsufficientData("no pairs".into()));
                }
                let mut sorted = x_g.to_vec();
                sorted.sort_by(f64::total_cmp);
                let tail = (1.0 - percent / 100.0) / 2.0;
                Ok((quantile(&sorted, tail), quantile(&sorted, 1.0 - tail)))
            }
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Unbiased variance of `y_f` over pairs `(y_f, x_g)` whose `x_g` lies in the window.
pub fn estimate_conditional_variance_windowed(pairs: &[(f64, f64)], window: &Window) -> Result<f64> {
    let x_g: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (lo, hi) = window.bounds(&x_g)?;
    let inside: Vec<f64> = pairs
        .iter()
        .filter(|(_, x)| (lo..=hi).contains(x))
        .map(|p| p.0)
        .collect();
    if inside.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} pairs in window [{lo}, {hi}], need 2",
            inside.len()
        )));
    }
    Ok(stats::variance(&inside))
}

/// Plug-in `var(y_f) - cov(y_f, x_g)² / var(x_g)` from sample moments, clamped at `floor`.
pub fn estimate_conditional_variance_moments(pairs: &[(f64, f64)], floor: f64) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let (y, x): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let var_x = stats::variance(&x);
    if !(var_x > 0.0) {
        return Err(Error::Degenerate("x_g has zero variance".into()));
    }
    let cov = stats::covariance(&y, &x);
    let s = stats::variance(&y) - cov * cov / var_x;
    Ok(if s > floor { s } else { floor })
}
