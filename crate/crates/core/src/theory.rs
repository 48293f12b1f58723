//! Closed-form behaviour of the minimal model as the robot's learned
//! quantities converge: the regression slope, the conditional-variance proxy,
//! the fusion weights, and the expected squared errors with and without
//! fusion.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{check_variance, ModelParams};

/// A critical variance that may not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Finite(f64),
    /// No bound: fusion helps for every secondary-cue variance.
    Unbounded,
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Finite(v) => Some(v),
            Threshold::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Threshold::Unbounded)
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Finite(v) => serializer.serialize_f64(*v),
            Threshold::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Finite(v) => write!(f, "{v:.6}"),
            Threshold::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Which favorability condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Prior variance no larger than primary-cue noise.
    StrongPrior,
    /// Secondary-cue noise below the critical variance.
    AccurateSecondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Favorability {
    /// `e_fused < e_primary`; exact ties count as not favorable.
    pub favorable: bool,
    /// The condition that predicts a gain, if any.
    pub condition: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub params: ModelParams,
    pub a_star: f64,
    pub s_star: f64,
    pub alpha: f64,
    pub beta: f64,
    pub e_primary: f64,
    pub e_fused: f64,
    pub favorable: bool,
    pub condition: Option<Condition>,
    pub sigma_f2_threshold: Threshold,
    pub c_rhs: Threshold,
    pub sigma_yf2_threshold: Threshold,
}

/// Asymptotic least-squares slope of the secondary-cue map, `σ_t²/(σ_f²+σ_t²)`.
pub fn slope(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(slope_unchecked(params.sigma_t2, params.sigma_f2))
}

fn slope_unchecked(t2: f64, f2: f64) -> f64 {
    t2 / (f2 + t2)
}

/// `var(y_f) - cov(y_f, x_g)² / var(x_g)` at the asymptotic slope.
pub fn conditional_variance(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(conditional_variance_difference(params))
}

/// Difference-of-terms form of the conditional variance.
pub fn conditional_variance_difference(params: &ModelParams) -> f64 {
    let (t2, g2, f2) = (params.sigma_t2, params.sigma_g2, params.sigma_f2);
    let t4 = t2 * t2;
    let tf = t2 + f2;
    t4 / tf - t4 * t4 / (tf * tf * (t2 + g2))
}

/// Factored form of the conditional variance; no cancellation between terms.
pub fn conditional_variance_factored(params: &ModelParams) -> f64 {
    let (t2, g2, f2) = (params.sigma_t2, params.sigma_g2, params.sigma_f2);
    let tf = t2 + f2;
    t2 * t2 * (t2 * g2 + f2 * t2 + f2 * g2) / (tf * tf * (t2 + g2))
}

/// Fusion weights `(alpha, beta)` on `(y_f, x_g)` given the proxy variance.
pub fn fusion_weights(sigma_g2: f64, s: f64) -> (f64, f64) {
    let denom = sigma_g2 + s;
    (sigma_g2 / denom, s / denom)
}

/// Expected squared error of using the primary cue alone.
pub fn expected_error_primary(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(params.sigma_g2)
}

/// Expected squared error of the fused estimate `alpha*y_f + beta*x_g`.
///
/// Evaluated from its parts (`a`, the proxy variance, and the weights) as
/// `(alpha*a + beta - 1)² σ_t² + (alpha*a)² σ_f² + beta² σ_g²`. Collapsing this
/// into a single rational function is error-prone; keep the composition.
pub fn expected_error_fused(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(fused_error_unchecked(params))
}

fn fused_error_unchecked(params: &ModelParams) -> f64 {
    let (t2, g2, f2) = (params.sigma_t2, params.sigma_g2, params.sigma_f2);
    let a = slope_unchecked(t2, f2);
    let s = conditional_variance_factored(params);
    let (alpha, beta) = fusion_weights(g2, s);
    let bias = alpha * a + beta - 1.0;
    bias * bias * t2 + (alpha * a).powi(2) * f2 + beta * beta * g2
}

pub fn fusion_favorable(params: &ModelParams) -> Result<Favorability> {
    params.validate()?;
    let favorable = fused_error_unchecked(params) < params.sigma_g2;
    let condition = if params.sigma_t2 <= params.sigma_g2 {
        Some(Condition::StrongPrior)
    } else {
        match sigma_f2_threshold(params.sigma_t2, params.sigma_g2)? {
            Threshold::Finite(c) if params.sigma_f2 < c => Some(Condition::AccurateSecondary),
            Threshold::Unbounded => Some(Condition::AccurateSecondary),
            _ => None,
        }
    };
    Ok(Favorability {
        favorable,
        condition,
    })
}

/// Both routes to the critical secondary-cue variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCheck {
    /// The radical expression.
    pub closed_form: f64,
    /// Root of `e_fused(σ_f²) - σ_g²` by bisection.
    pub bisection: f64,
}

impl ThresholdCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.closed_form - self.bisection).abs() / self.bisection.abs()
    }
}

/// Relative agreement required between the closed form and the bisection root.
pub const THRESHOLD_CROSS_CHECK_TOL: f64 = 1e-6;

/// Largest secondary-cue variance for which fusion still helps, when the
/// prior is weaker than the primary cue. Unbounded when `σ_t² <= σ_g²`.
///
/// The radical expression loses precision as `σ_t² → σ_g²`; whenever it
/// disagrees with the bisection root beyond [`THRESHOLD_CROSS_CHECK_TOL`] the
/// bisection root is returned instead.
pub fn sigma_f2_threshold(sigma_t2: f64, sigma_g2: f64) -> Result<Threshold> {
    Ok(match sigma_f2_threshold_checked(sigma_t2, sigma_g2)? {
        None => Threshold::Unbounded,
        Some(check) if check.relative_gap() <= THRESHOLD_CROSS_CHECK_TOL => {
            Threshold::Finite(check.closed_form)
        }
        Some(check) => Threshold::Finite(check.bisection),
    })
}

/// Both threshold routes, or `None` when the threshold is unbounded.
pub fn sigma_f2_threshold_checked(sigma_t2: f64, sigma_g2: f64) -> Result<Option<ThresholdCheck>> {
    check_variance("sigma_t2", sigma_t2)?;
    check_variance("sigma_g2", sigma_g2)?;
    if sigma_t2 <= sigma_g2 {
        return Ok(None);
    }
    let closed_form = threshold_closed_form(sigma_t2, sigma_g2);
    let bisection = threshold_bisection(sigma_t2, sigma_g2)?;
    Ok(Some(ThresholdCheck {
        closed_form,
        bisection,
    }))
}

fn threshold_closed_form(t2: f64, g2: f64) -> f64 {
    let g4 = g2 * g2;
    let t4 = t2 * t2;
    let t6 = t4 * t2;
    let t8 = t4 * t4;
    let radical = (17.0 * g4 * t8 + 18.0 * g2 * t8 * t2 + t6 * t6).sqrt();
    -0.5 * (2.0 * g4 * t2 + 3.0 * t4 * g2 + t6 + radical) / (g4 - t4)
}

fn threshold_bisection(t2: f64, g2: f64) -> Result<f64> {
    let gap = |f2: f64| {
        let p = ModelParams {
            sigma_t2: t2,
            sigma_g2: g2,
            sigma_f2: f2,
        };
        fused_error_unchecked(&p) - g2
    };
    let mut lo = g2;
    let mut steps = 0;
    while gap(lo) >= 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 2000 || lo == 0.0 {
            return Err(Error::Numerical("no lower bracket for the threshold".into()));
        }
    }
    let mut hi = g2;
    while gap(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("no upper bracket for the threshold".into()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The critical variance re-expressed for the learned cue: `a(C)² · C`.
pub fn sigma_yf2_threshold(sigma_t2: f64, sigma_g2: f64) -> Result<Threshold> {
    Ok(match sigma_f2_threshold(sigma_t2, sigma_g2)? {
        Threshold::Finite(c) => {
            let a = slope_unchecked(sigma_t2, c);
            Threshold::Finite(a * a * c)
        }
        Threshold::Unbounded => Threshold::Unbounded,
    })
}

/// Posterior mean (= MAP) of `t` for an estimator that knows all three variances.
pub fn oracle_fusion_estimate(params: &ModelParams, x_g: f64, x_f: f64) -> Result<f64> {
    params.validate()?;
    let (t2, g2, f2) = (params.sigma_t2, params.sigma_g2, params.sigma_f2);
    Ok(t2 * (f2 * x_g + g2 * x_f) / (g2 * f2 + t2 * f2 + t2 * g2))
}

pub fn theory_report(params: &ModelParams) -> Result<TheoryReport> {
    params.validate()?;
    let a_star = slope_unchecked(params.sigma_t2, params.sigma_f2);
    let s_star = conditional_variance_factored(params);
    let (alpha, beta) = fusion_weights(params.sigma_g2, s_star);
    let fav = fusion_favorable(params)?;
    let threshold = sigma_f2_threshold(params.sigma_t2, params.sigma_g2)?;
    Ok(TheoryReport {
        params: *params,
        a_star,
        s_star,
        alpha,
        beta,
        e_primary: params.sigma_g2,
        e_fused: fused_error_unchecked(params),
        favorable: fav.favorable,
        condition: fav.condition,
        sigma_f2_threshold: threshold,
        c_rhs: threshold,
        sigma_yf2_threshold: sigma_yf2_threshold(params.sigma_t2, params.sigma_g2)?,
    })
}
