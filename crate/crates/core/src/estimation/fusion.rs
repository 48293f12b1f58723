use serde::{Deserialize, Serialize};

use super::knn::KnnRegressor;
use super::linear::LinearMap;
use crate::error::{Error, Result};

/// The learned map from the raw secondary signal to the primary cue's scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Linear(LinearMap),
    Knn(KnnRegressor),
}

impl Regressor {
    pub fn predict(&self, x: f64) -> f64 {
        match self {
            Regressor::Linear(m) => m.predict(x),
            Regressor::Knn(m) => m.predict(x),
        }
    }
}

/// Everything the robot needs at inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionModel {
    pub sigma_g2_known: f64,
    pub s_hat: f64,
    pub regressor: Regressor,
}

impl FusionModel {
    pub fn new(sigma_g2_known: f64, s_hat: f64, regressor: Regressor) -> Result<Self> {
        let model = Self {
            sigma_g2_known,
            s_hat,
            regressor,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_g2_known", self.sigma_g2_known), ("s_hat", self.s_hat)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        match &self.regressor {
            Regressor::Linear(m) if !(m.a.is_finite() && m.b.is_finite()) => {
                Err(Error::InvalidParams("non-finite linear coefficients".into()))
            }
            Regressor::Knn(k) => k.validate(),
            _ => Ok(()),
        }
    }

    /// Weights `(alpha, beta)` applied to `(y_f, x_g)`.
    pub fn weights(&self) -> (f64, f64) {
        crate::theory::fusion_weights(self.sigma_g2_known, self.s_hat)
    }

    /// Maps the raw secondary signal and fuses it with the primary cue.
    pub fn estimate(&self, x_f: f64, x_g: f64) -> f64 {
        fuse(self, self.regressor.predict(x_f), x_g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Precision-weighted average `(σ_g² y_f + s x_g) / (σ_g² + s)`.
pub fn fuse(model: &FusionModel, y_f: f64, x_g: f64) -> f64 {
    let (alpha, beta) = model.weights();
    let fused = alpha * y_f + beta * x_g;
    // Rounding can leave the result an ulp outside the inputs.
    fused.clamp(y_f.min(x_g), y_f.max(x_g))
}
