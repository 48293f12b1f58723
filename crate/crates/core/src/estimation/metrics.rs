use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mse: f64,
    pub mae: f64,
}

/// Mean squared and mean absolute error of `estimates` against `truths`.
pub fn errors(estimates: &[f64], truths: &[f64]) -> Result<ErrorSummary> {
    if estimates.len() != truths.len() {
        return Err(Error::Usage(format!(
            "length mismatch: {} estimates vs {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::Usage("no estimates".into()));
    }
    let n = estimates.len() as f64;
    let (sq, abs) = estimates
        .iter()
        .zip(truths)
        .fold((0.0, 0.0), |(sq, abs), (e, t)| {
            let d = e - t;
            (sq + d * d, abs + d.abs())
        });
    Ok(ErrorSummary {
        mse: sq / n,
        mae: abs / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let e = errors(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((e.mse, e.mae), (0.0, 0.0));
    }

    #[test]
    fn unit_offsets() {
        let e = errors(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!((e.mse, e.mae), (1.0, 1.0));
    }

    #[test]
    fn mismatch_is_usage_error() {
        assert!(matches!(errors(&[1.0], &[]), Err(Error::Usage(_))));
        assert!(matches!(errors(&[], &[]), Err(Error::Usage(_))));
    }
}
