use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    errors, estimate_conditional_variance_moments, estimate_conditional_variance_windowed,
    fit_knn, fuse, FusionModel, Regressor, Window, VARIANCE_FLOOR,
};
use crate::rng::{SeededStream, StreamTag};
use crate::sensor::{calibrate, pressure_to_height, BarometricConstants, SensorLog};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimaryCue {
    /// Sonar trains a map from raw pressure.
    Sonar,
    /// Calibrated barometric height trains a map from sonar.
    Barometer,
}

/// How the proxy variance is estimated on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxyEstimator {
    Moments,
    Windowed(Window),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaseStudyConfig {
    pub primary_cue: PrimaryCue,
    pub k: usize,
    /// Train / validation / test fractions.
    pub splits: [f64; 3],
    pub runs: usize,
    pub seed: u64,
    pub proxy: ProxyEstimator,
    pub constants: BarometricConstants,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            primary_cue: PrimaryCue::Sonar,
            k: 3,
            splits: [0.8, 0.1, 0.1],
            runs: 100,
            seed: crate::DEFAULT_SEED,
            proxy: ProxyEstimator::Moments,
            constants: BarometricConstants::default(),
        }
    }
}

impl CaseStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParams("runs must be >= 1".into()));
        }
        if self.splits.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "split fractions must be > 0, got {:?}",
                self.splits
            )));
        }
        let total: f64 = self.splits.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "split fractions must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    /// Sizes of the train / validation / test splits for `n` records.
    pub fn split_sizes(&self, n: usize) -> [usize; 3] {
        let train = (self.splits[0] * n as f64).floor() as usize;
        let val = (self.splits[1] * n as f64).floor() as usize;
        [train, val, n - train - val]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub run: usize,
    pub mae_primary: f64,
    pub mae_secondary: f64,
    pub mae_fused: f64,
    pub sigma_g2: f64,
    pub s_hat: f64,
}

impl RunRow {
    /// Strictly better than the primary cue; ties are failures.
    pub fn fusion_succeeded(&self) -> bool {
        self.mae_fused < self.mae_primary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: CaseStudyConfig,
    pub records: usize,
    pub split_sizes: [usize; 3],
    pub mean_mae_primary: f64,
    pub mean_mae_secondary: f64,
    pub mean_mae_fused: f64,
    pub success_rate: f64,
    pub runs: Vec<RunRow>,
}

/// Repeats the shuffle-split protocol `config.runs` times.
///
/// Per run: the primary cue is the sonar, or the barometric height calibrated
/// against ground truth on the training split. The primary-cue variance is
/// measured against ground truth on the training split, a kNN map from the
/// other sensor's raw signal to the primary cue is fitted on it, the proxy
/// variance is estimated on the validation split from `(y_f, x_g)` only, and
/// the three cues are scored by MAE on the test split.
pub fn run_case_study(log: &SensorLog, config: &CaseStudyConfig) -> Result<RunReport> {
    config.validate()?;
    let n = log.len();
    let sizes = config.split_sizes(n);
    if sizes.iter().any(|&s| s < config.k + 2) {
        return Err(Error::InsufficientData(format!(
            "{n} records give splits {sizes:?}; each needs at least k + 2 = {}",
            config.k + 2
        )));
    }
    let runs: Vec<RunRow> = (0..config.runs)
        .into_par_iter()
        .map(|run| single_run(log, config, sizes, run))
        .collect::<Result<_>>()?;

    let count = runs.len() as f64;
    let mean_of = |f: fn(&RunRow) -> f64| runs.iter().map(f).sum::<f64>() / count;
    Ok(RunReport {
        config: config.clone(),
        records: n,
        split_sizes: sizes,
        mean_mae_primary: mean_of(|r| r.mae_primary),
        mean_mae_secondary: mean_of(|r| r.mae_secondary),
        mean_mae_fused: mean_of(|r| r.mae_fused),
        success_rate: runs.iter().filter(|r| r.fusion_succeeded()).count() as f64 / count,
        runs,
    })
}

/// Shuffled train / validation / test index sets for one run.
pub fn split_indices(n: usize, sizes: [usize; 3], seed: u64, run: usize) -> [Vec<usize>; 3] {
    let mut order: Vec<usize> = (0..n).collect();
    SeededStream::tagged(seed, StreamTag::CaseStudyRun, run as u64).shuffle(&mut order);
    let test = order.split_off(sizes[0] + sizes[1]);
    let val = order.split_off(sizes[0]);
    [order, val, test]
}

fn single_run(log: &SensorLog, config: &CaseStudyConfig, sizes: [usize; 3], run: usize) -> Result<RunRow> {
    let records = log.records();
    let [train, val, test] = split_indices(records.len(), sizes, config.seed, run);
    let (train, val, test) = (&train[..], &val[..], &test[..]);

    let truth: Vec<f64> = records.iter().map(|r| r.truth_height).collect();
    let (primary, secondary_raw): (Vec<f64>, Vec<f64>) = match config.primary_cue {
        PrimaryCue::Sonar => records.iter().map(|r| (r.sonar_height, r.pressure)).unzip(),
        PrimaryCue::Barometer => {
            let raw_height: Vec<f64> = records
                .iter()
                .map(|r| pressure_to_height(r.pressure, &config.constants))
                .collect::<Result<_>>()?;
            let cal = calibrate(&pick(&raw_height, train), &pick(&truth, train))?;
            let calibrated = raw_height.iter().map(|h| cal.apply(*h));
            calibrated.zip(records.iter().map(|r| r.sonar_height)).unzip()
        }
    };

    let primary_err: Vec<f64> = train.iter().map(|&i| primary[i] - truth[i]).collect();
    let sigma_g2 = stats::variance(&primary_err).max(VARIANCE_FLOOR);

    let train_pairs: Vec<(f64, f64)> = train.iter().map(|&i| (secondary_raw[i], primary[i])).collect();
    let knn = fit_knn(&train_pairs, config.k)?;

    let val_pairs: Vec<(f64, f64)> = val
        .iter()
        .map(|&i| (knn.predict(secondary_raw[i]), primary[i]))
        .collect();
    let s_hat = match &config.proxy {
        ProxyEstimator::Moments => estimate_conditional_variance_moments(&val_pairs, VARIANCE_FLOOR)?,
        ProxyEstimator::Windowed(w) => {
            estimate_conditional_variance_windowed(&val_pairs, w)?.max(VARIANCE_FLOOR)
        }
    };
    let model = FusionModel::new(sigma_g2, s_hat, Regressor::Knn(knn))?;

    let mut est_primary = Vec::with_capacity(test.len());
    let mut est_secondary = Vec::with_capacity(test.len());
    let mut est_fused = Vec::with_capacity(test.len());
    for &i in test {
        let y_f = model.regressor.predict(secondary_raw[i]);
        est_primary.push(primary[i]);
        est_secondary.push(y_f);
        est_fused.push(fuse(&model, y_f, primary[i]));
    }
    let test_truth = pick(&truth, test);
    Ok(RunRow {
        run,
        mae_primary: errors(&est_primary, &test_truth)?.mae,
        mae_secondary: errors(&est_secondary, &test_truth)?.mae,
        mae_fused: errors(&est_fused, &test_truth)?.mae,
        sigma_g2,
        s_hat,
    })
}

fn pick(values: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| values[i]).collect()
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let cue = match self.config.primary_cue {
            PrimaryCue::Sonar => "sonar",
            PrimaryCue::Barometer => "barometer",
        };
        format!(
            "primary cue      {cue}\n\
             records          {} (train/val/test {}/{}/{})\n\
             runs             {}\n\
             MAE primary      {:.4} m\n\
             MAE secondary    {:.4} m\n\
             MAE fused        {:.4} m\n\
             successful       {:.1}%\n",
            self.records,
            self.split_sizes[0],
            self.split_sizes[1],
            self.split_sizes[2],
            self.runs.len(),
            self.mean_mae_primary,
            self.mean_mae_secondary,
            self.mean_mae_fused,
            100.0 * self.success_rate,
        )
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("run,mae_primary,mae_secondary,mae_fused,sigma_g2,s_hat\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.run, r.mae_primary, r.mae_secondary, r.mae_fused, r.sigma_g2, r.s_hat
            ));
        }
        out
    }
}
