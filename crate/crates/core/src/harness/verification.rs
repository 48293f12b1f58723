use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{
    estimate_conditional_variance_windowed, fit_linear, fuse, FusionModel, Regressor, Window,
    VARIANCE_FLOOR,
};
use crate::model::{draw, ModelParams};
use crate::theory;

/// The four parameter triples `(σ_t², σ_g², σ_f²)` of the reference table.
pub fn table1_params() -> [ModelParams; 4] {
    [
        (6.25, 1.0, 1.0),
        (6.25, 1.0, 16.0),
        (0.25, 1.0, 1.0),
        (0.25, 1.0, 100.0),
    ]
    .map(|(t, g, f)| ModelParams {
        sigma_t2: t,
        sigma_g2: g,
        sigma_f2: f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub window: Window,
}

/// Empirical errors of one simulated dataset next to their predicted values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub params: ModelParams,
    pub n: usize,
    pub seed: u64,
    pub a_hat: f64,
    pub s_hat: f64,
    pub mse_primary_empirical: f64,
    pub mse_primary_theory: f64,
    /// Standard error of the empirical primary MSE (per-sample squared errors).
    pub se_primary: f64,
    pub mse_fused_empirical: f64,
    pub mse_fused_theory: f64,
    pub se_fused: f64,
}

/// Simulates the robot: least-squares slope on `(x_f, x_g)`, windowed proxy
/// variance, fusion, and squared errors against the hidden target.
pub fn verify_theory(
    params: &ModelParams,
    n: usize,
    seed: u64,
    options: &VerifyOptions,
) -> Result<VerificationRow> {
    if n < 100 {
        return Err(Error::InvalidParams(format!("need n >= 100, got {n}")));
    }
    let ds = draw(params, n, seed)?;
    let map = fit_linear(&ds.samples.iter().map(|s| (s.x_f, s.x_g)).collect::<Vec<_>>())?;
    let learned: Vec<(f64, f64)> = ds.samples.iter().map(|s| (map.predict(s.x_f), s.x_g)).collect();
    let s_hat = estimate_conditional_variance_windowed(&learned, &options.window)?.max(VARIANCE_FLOOR);
    let model = FusionModel::new(params.sigma_g2, s_hat, Regressor::Linear(map))?;

    let mut primary = Vec::with_capacity(n);
    let mut fused = Vec::with_capacity(n);
    for (s, (y_f, x_g)) in ds.samples.iter().zip(&learned) {
        primary.push((x_g - s.t).powi(2));
        fused.push((fuse(&model, *y_f, *x_g) - s.t).powi(2));
    }
    let (mse_primary, se_primary) = mean_and_se(&primary);
    let (mse_fused, se_fused) = mean_and_se(&fused);
    Ok(VerificationRow {
        params: *params,
        n,
        seed,
        a_hat: map.a,
        s_hat,
        mse_primary_empirical: mse_primary,
        mse_primary_theory: theory::expected_error_primary(params)?,
        se_primary,
        mse_fused_empirical: mse_fused,
        mse_fused_theory: theory::expected_error_fused(params)?,
        se_fused,
    })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = crate::stats::mean(xs);
    (m, (crate::stats::variance(xs) / xs.len() as f64).sqrt())
}

impl VerificationRow {
    pub const TEXT_HEADER: &'static str =
        "sigma_t2  sigma_g2  sigma_f2        n   primary (theory)    fused (theory)";

    pub fn to_text_line(&self) -> String {
        format!(
            "{:>8} {:>9} {:>9} {:>8}   {:>6.3} ({:>5.2})    {:>6.3} ({:>5.2})",
            self.params.sigma_t2,
            self.params.sigma_g2,
            self.params.sigma_f2,
            self.n,
            self.mse_primary_empirical,
            self.mse_primary_theory,
            self.mse_fused_empirical,
            self.mse_fused_theory,
        )
    }
}
