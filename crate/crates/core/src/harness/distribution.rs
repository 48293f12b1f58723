use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{SeededStream, StreamTag};
use crate::stats;

/// Number of simulated normal samples in the randomization test.
pub const DEFAULT_RESAMPLES: usize = 10_000;

const MIN_VALUES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistOptions {
    /// Equal-probability bin count; `None` uses [`default_bin_count`].
    pub bins: Option<usize>,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for DistOptions {
    fn default() -> Self {
        Self {
            bins: None,
            resamples: DEFAULT_RESAMPLES,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// `max(5, n / 50)`, capped at 50.
pub fn default_bin_count(n: usize) -> usize {
    (n / 50).clamp(5, 50)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` finite edges; the outer two are widened to the data range.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub bins: usize,
    /// Pearson statistic against the normal with the same mean and std.
    pub chi_square: f64,
    /// Share of simulated normal samples whose statistic is at least as large.
    pub p_value: f64,
    pub resamples: usize,
    pub histogram: Histogram,
}

/// Interior standard-normal quantiles splitting the line into `bins` equal-probability cells.
fn standard_edges(bins: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (1..bins)
        .map(|j| normal.inverse_cdf(j as f64 / bins as f64))
        .collect()
}

fn bin_counts(values: &[f64], mean: f64, std: f64, edges: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; edges.len() + 1];
    for v in values {
        let z = (v - mean) / std;
        counts[edges.partition_point(|e| *e <= z)] += 1;
    }
    counts
}

/// `Σ (O - E)² / E` with equal expected counts.
pub fn chi_square_statistic(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum()
}

/// Chi-square of `values` against its own fitted normal.
fn fitted_chi_square(values: &[f64], edges: &[f64]) -> f64 {
    let mean = stats::mean(values);
    let std = stats::std_dev(values);
    chi_square_statistic(&bin_counts(values, mean, std, edges))
}

/// Compares `values` with the normal of the same mean and standard deviation.
///
/// Each simulated sample has its own mean and std fitted before binning, so
/// observed and simulated statistics are computed the same way. The statistic
/// is location-scale invariant, which lets the simulation draw standard normals.
pub fn analyze_distribution(values: &[f64], options: &DistOptions) -> Result<DistStats> {
    let n = values.len();
    if n < MIN_VALUES {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_VALUES} values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite value".into()));
    }
    let bins = options.bins.unwrap_or_else(|| default_bin_count(n));
    if bins < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 bins, got {bins}")));
    }
    if options.resamples == 0 {
        return Err(Error::InvalidParams("resamples must be >= 1".into()));
    }
    let mean = stats::mean(values);
    let std = stats::std_dev(values);
    if !(std > 0.0) {
        return Err(Error::Degenerate("values have zero standard deviation".into()));
    }

    let edges = standard_edges(bins);
    let counts = bin_counts(values, mean, std, &edges);
    let observed = chi_square_statistic(&counts);

    let at_least_as_large = (0..options.resamples)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, m| {
                let mut s = SeededStream::tagged(options.seed, StreamTag::Resample, m as u64);
                buf.iter_mut().for_each(|x| *x = s.standard_normal());
                usize::from(fitted_chi_square(buf, &edges) >= observed)
            },
        )
        .sum::<usize>();

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let mut hist_edges = Vec::with_capacity(bins + 1);
    hist_edges.push(f64::NAN);
    hist_edges.extend(edges.iter().map(|z| mean + std * z));
    hist_edges.push(f64::NAN);
    hist_edges[0] = lo.min(hist_edges[1]);
    hist_edges[bins] = hi.max(hist_edges[bins - 1]);

    Ok(DistStats {
        n,
        mean,
        std,
        bins,
        chi_square: observed,
        p_value: at_least_as_large as f64 / options.resamples as f64,
        resamples: options.resamples,
        histogram: Histogram {
            edges: hist_edges,
            counts,
        },
    })
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `p` and Uniform(0, 1).
pub fn ks_statistic_uniform(p: &[f64]) -> f64 {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let above = (i + 1) as f64 / n - x;
            let below = x - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

impl DistStats {
    pub fn to_text(&self) -> String {
        format!(
            "n            {}\nmean         {:.6}\nstd          {:.6}\nbins         {}\nchi-square   {:.6}\np-value      {:.6} ({} resamples)\n",
            self.n, self.mean, self.std, self.bins, self.chi_square, self.p_value, self.resamples
        )
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin,lower,upper,count\n");
        for (i, c) in self.histogram.counts.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{c}\n",
                self.histogram.edges[i],
                self.histogram.edges[i + 1]
            ));
        }
        out
    }
}
