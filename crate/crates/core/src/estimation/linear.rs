use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = a*x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearMap {
    pub a: f64,
    pub b: f64,
}

impl LinearMap {
    pub fn through_origin(a: f64) -> Self {
        Self { a, b: 0.0 }
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

/// Zero-intercept least squares: minimizes `Σ (a*x_f - x_g)²` over pairs `(x_f, x_g)`.
pub fn fit_linear(pairs: &[(f64, f64)]) -> Result<LinearMap> {
    if pairs.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    let first = pairs[0].0;
    if pairs.iter().all(|&(x, _)| x == first) {
        return Err(Error::Fit("all inputs are identical".into()));
    }
    let (sxy, sxx) = pairs
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), &(x, y)| (sxy + x * y, sxx + x * x));
    let a = sxy / sxx;
    if !a.is_finite() {
        return Err(Error::Fit(format!("non-finite slope {a}")));
    }
    Ok(LinearMap::through_origin(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw, ModelParams};
    use crate::theory;

    #[test]
    fn exact_line() {
        let m = fit_linear(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]).unwrap();
        assert_eq!(m.a, 2.0);
        assert_eq!(m.b, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_linear(&[(1.0, 1.0)]), Err(Error::Fit(_))));
        assert!(matches!(fit_linear(&[]), Err(Error::Fit(_))));
        assert!(matches!(
            fit_linear(&[(2.0, 1.0), (2.0, 3.0)]),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn predict_linear() {
        assert_eq!(LinearMap::through_origin(0.5).predict(4.0), 2.0);
        assert_eq!(LinearMap { a: 2.0, b: 1.0 }.predict(3.0), 7.0);
    }

    #[test]
    fn slope_converges_to_theory() {
        let params = ModelParams::new(6.25, 1.0, 1.0).unwrap();
        let ds = draw(&params, 100_000, 17).unwrap();
        let pairs: Vec<(f64, f64)> = ds.samples.iter().map(|s| (s.x_f, s.x_g)).collect();
        let a = fit_linear(&pairs).unwrap().a;
        assert!((a - theory::slope(&params).unwrap()).abs() < 0.01, "{a}");
    }

    #[test]
    fn slope_error_shrinks_like_inverse_sqrt_n() {
        // Average |a_hat - a*| over independent replicates at each n so the
        // ratio between successive decades is stable.
        let params = ModelParams::new(6.25, 1.0, 1.0).unwrap();
        let a_star = theory::slope(&params).unwrap();
        let reps = 150;
        let mean_abs_err = |n: usize, offset: u64| {
            (0..reps)
                .map(|r| {
                    let ds = draw(&params, n, offset + r).unwrap();
                    let pairs: Vec<(f64, f64)> =
                        ds.samples.iter().map(|s| (s.x_f, s.x_g)).collect();
                    (fit_linear(&pairs).unwrap().a - a_star).abs()
                })
                .sum::<f64>()
                / reps as f64
        };
        let e3 = mean_abs_err(1_000, 1000);
        let e4 = mean_abs_err(10_000, 2000);
        let e5 = mean_abs_err(100_000, 3000);
        for ratio in [e3 / e4, e4 / e5] {
            assert!((2.5..=4.0).contains(&ratio), "ratio {ratio} ({e3}, {e4}, {e5})");
        }
    }
}
