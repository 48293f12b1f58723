use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k-nearest-neighbour regression on a scalar input.
///
/// Neighbours are ranked by `|input - x|`; ties go to the smaller input, then
/// to the earlier training pair. The prediction is the unweighted mean of the
/// k selected targets, summed in rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnRegressor {
    k: usize,
    /// Training pairs `(input, target)`, stably sorted by input.
    pairs: Vec<(f64, f64)>,
}

pub fn fit_knn(pairs: &[(f64, f64)], k: usize) -> Result<KnnRegressor> {
    if k == 0 {
        return Err(Error::Fit("k must be >= 1".into()));
    }
    if k > pairs.len() {
        return Err(Error::Fit(format!(
            "k = {k} exceeds the {} training pairs",
            pairs.len()
        )));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("non-finite training pair".into()));
    }
    let mut sorted = pairs.to_vec();
    // Stable, and -0.0 == 0.0 keeps training order for signed zeros.
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite inputs"));
    Ok(KnnRegressor { k, pairs: sorted })
}

impl KnnRegressor {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Re-checks the invariants after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.pairs.len() {
            return Err(Error::InvalidParams(format!(
                "k = {} invalid for {} pairs",
                self.k,
                self.pairs.len()
            )));
        }
        if self.pairs.windows(2).any(|w| w[0].0 > w[1].0) {
            return Err(Error::InvalidParams("kNN pairs are not sorted by input".into()));
        }
        Ok(())
    }

    pub fn predict(&self, x: f64) -> f64 {
        let pairs = &self.pairs;
        // Groups of equal inputs are consumed whole-or-partially from their
        // first element, so training order is respected inside a group even
        // when walking leftwards.
        let split = pairs.partition_point(|p| p.0 < x);
        let mut left_end = split; // exclusive end of the unvisited left region
        let mut right = split;
        let mut taken = 0;
        let mut sum = 0.0;
        while taken < self.k {
            let left_start = (left_end > 0).then(|| group_start(pairs, left_end - 1));
            let right_end = (right < pairs.len()).then(|| group_end(pairs, right));
            let take_left = match (left_start, right_end) {
                (Some(ls), Some(_)) => (pairs[ls].0 - x).abs() <= (pairs[right].0 - x).abs(),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!("k <= number of pairs"),
            };
            let group = if take_left {
                let ls = left_start.unwrap();
                let g = ls..left_end;
                left_end = ls;
                g
            } else {
                let re = right_end.unwrap();
                let g = right..re;
                right = re;
                g
            };
            for &(_, target) in pairs[group].iter().take(self.k - taken) {
                sum += target;
                taken += 1;
            }
        }
        sum / self.k as f64
    }
}

fn group_start(pairs: &[(f64, f64)], mut i: usize) -> usize {
    let v = pairs[i].0;
    while i > 0 && pairs[i - 1].0 == v {
        i -= 1;
    }
    i
}

fn group_end(pairs: &[(f64, f64)], mut i: usize) -> usize {
    let v = pairs[i].0;
    while i < pairs.len() && pairs[i].0 == v {
        i += 1;
    }
    i
}
