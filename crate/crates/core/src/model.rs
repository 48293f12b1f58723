//! The minimal generative model: a zero-mean Gaussian target observed
//! through two conditionally independent Gaussian cues.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeededStream, StreamTag};

/// Ground-truth variances of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Prior variance of the target.
    pub sigma_t2: f64,
    /// Noise variance of the primary cue.
    pub sigma_g2: f64,
    /// Noise variance of the secondary cue.
    pub sigma_f2: f64,
}

impl ModelParams {
    pub fn new(sigma_t2: f64, sigma_g2: f64, sigma_f2: f64) -> Result<Self> {
        let params = Self {
            sigma_t2,
            sigma_g2,
            sigma_f2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_variance("sigma_t2", self.sigma_t2)?;
        check_variance("sigma_g2", self.sigma_g2)?;
        check_variance("sigma_f2", self.sigma_f2)
    }
}

pub(crate) fn check_variance(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}

/// One draw `(t, x_g, x_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x_g: f64,
    pub x_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub params: ModelParams,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

/// Contents of the JSON sidecar written next to a dataset CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub params: ModelParams,
    pub seed: u64,
    pub n: usize,
}

/// Draw `n` samples: `t` first, then `x_g` and `x_f` independently given `t`.
pub fn draw(params: &ModelParams, n: usize, seed: u64) -> Result<Dataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams("sample count must be >= 1".into()));
    }
    let mut stream = SeededStream::tagged(seed, StreamTag::Dataset, 0);
    let samples = (0..n)
        .map(|_| {
            let t = stream.normal(0.0, params.sigma_t2);
            let x_g = stream.normal(t, params.sigma_g2);
            let x_f = stream.normal(t, params.sigma_f2);
            Sample { t, x_g, x_f }
        })
        .collect();
    Ok(Dataset {
        params: *params,
        seed,
        samples,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            params: self.params,
            seed: self.seed,
            n: self.samples.len(),
        }
    }

    /// Writes `<csv_path>` with header `t,x_g,x_f` and the sidecar `<csv_path>.json`.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
        for s in &self.samples {
            writer.serialize(s).map_err(|e| csv_error(csv_path, e))?;
        }
        writer
            .flush()
            .map_err(|e| Error::io(csv_path, e))?;
        let sidecar = sidecar_path(csv_path);
        let json = serde_json::to_string_pretty(&self.meta())?;
        fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
    }

    pub fn load(csv_path: &Path) -> Result<Self> {
        let sidecar = sidecar_path(csv_path);
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text)?;
        meta.params.validate()?;

        let mut reader = csv::Reader::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
        let header = reader.headers().map_err(|e| csv_error(csv_path, e))?;
        if header != vec!["t", "x_g", "x_f"] {
            return Err(Error::Parse {
                path: csv_path.into(),
                line: 1,
                message: format!("expected header t,x_g,x_f, found {}", header.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut samples = Vec::with_capacity(meta.n);
        for record in reader.deserialize::<Sample>() {
            let sample = record.map_err(|e| csv_error(csv_path, e))?;
            if !(sample.t.is_finite() && sample.x_g.is_finite() && sample.x_f.is_finite()) {
                return Err(Error::Parse {
                    path: csv_path.into(),
                    line: samples.len() as u64 + 2,
                    message: "non-finite value".into(),
                });
            }
            samples.push(sample);
        }
        if samples.len() != meta.n {
            return Err(Error::Parse {
                path: csv_path.into(),
                line: samples.len() as u64 + 1,
                message: format!("sidecar declares {} rows, found {}", meta.n, samples.len()),
            });
        }
        Ok(Self {
            params: meta.params,
            seed: meta.seed,
            samples,
        })
    }
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.into(),
        line,
        message: err.to_string(),
    }
}
