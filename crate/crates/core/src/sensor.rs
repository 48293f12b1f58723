//! Height-estimation case study data path: barometric conversion, affine
//! calibration, sensor-log CSV I/O and a synthetic flight-log generator.
//!
//! The generator stands in for a recorded flight. Its default noise levels
//! are an approximation: sonar noise is 0.29 m, and the pressure noise (2 Pa,
//! about 0.17 m) is picked so that a kNN map from pressure to sonar height
//! ends up with roughly 0.25 m error. No raw barometer noise figure is
//! available to calibrate it against directly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::csv_error;
use crate::rng::{SeededStream, StreamTag};

/// Constants of the isothermal barometric formula (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarometricConstants {
    /// Gas constant, J/(mol·K).
    pub r: f64,
    /// Sea-level temperature, K.
    pub t_s: f64,
    /// Molar mass of air, kg/mol.
    pub m: f64,
    /// Gravity, m/s².
    pub g: f64,
    /// Sea-level pressure, Pa.
    pub p_s: f64,
}

impl Default for BarometricConstants {
    fn default() -> Self {
        Self {
            r: 8.31446,
            t_s: 288.15,
            m: 0.0289644,
            g: 9.80665,
            p_s: 101325.0,
        }
    }
}

impl BarometricConstants {
    /// Scale height `R·T_s / (M·g)` in meters.
    pub fn scale_height(&self) -> f64 {
        self.r * self.t_s / (self.m * self.g)
    }
}

/// `(R·T_s/(M·g)) · ln(P_s/P)`.
pub fn pressure_to_height(pressure: f64, consts: &BarometricConstants) -> Result<f64> {
    if !(pressure > 0.0 && pressure.is_finite()) {
        return Err(Error::Domain(format!("pressure must be > 0, got {pressure}")));
    }
    Ok(-consts.scale_height() * ((pressure - consts.p_s) / consts.p_s).ln_1p())
}

/// Inverse of [`pressure_to_height`].
pub fn height_to_pressure(height: f64, consts: &BarometricConstants) -> f64 {
    consts.p_s + consts.p_s * (-height / consts.scale_height()).exp_m1()
}

/// Affine map `scale * raw + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub scale: f64,
    pub offset: f64,
}

impl Calibration {
    pub fn apply(&self, raw: f64) -> f64 {
        self.scale * raw + self.offset
    }
}

/// Ordinary least-squares fit of `reference ≈ scale * raw + offset`.
pub fn calibrate(raw: &[f64], reference: &[f64]) -> Result<Calibration> {
    if raw.len() != reference.len() {
        return Err(Error::Fit(format!(
            "length mismatch: {} raw vs {} reference",
            raw.len(),
            reference.len()
        )));
    }
    if raw.len() < 2 {
        return Err(Error::Fit("need at least 2 points".into()));
    }
    let n = raw.len() as f64;
    let mx = raw.iter().sum::<f64>() / n;
    let my = reference.iter().sum::<f64>() / n;
    let (sxy, sxx) = raw
        .iter()
        .zip(reference)
        .fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
            let dx = x - mx;
            (sxy + dx * (y - my), sxx + dx * dx)
        });
    if !(sxx > 0.0) {
        return Err(Error::Fit("raw heights are all equal".into()));
    }
    let scale = sxy / sxx;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Fit(format!("degenerate scale {scale}")));
    }
    Ok(Calibration {
        scale,
        offset: my - scale * mx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    #[serde(rename = "time_s")]
    pub timestamp: f64,
    #[serde(rename = "truth_m")]
    pub truth_height: f64,
    #[serde(rename = "sonar_m")]
    pub sonar_height: f64,
    #[serde(rename = "pressure_pa")]
    pub pressure: f64,
}

/// Validated time series of sensor records.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLog {
    records: Vec<SensorRecord>,
}

const LOG_HEADER: [&str; 4] = ["time_s", "truth_m", "sonar_m", "pressure_pa"];

impl SensorLog {
    pub fn new(records: Vec<SensorRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            check_record(r, i.checked_sub(1).map(|j| &records[j])).map_err(Error::InvalidParams)?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SensorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for r in &self.records {
            writer.serialize(r).map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_record(r: &SensorRecord, prev: Option<&SensorRecord>) -> std::result::Result<(), String> {
    let fields = [r.timestamp, r.truth_height, r.sonar_height, r.pressure];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err("non-finite field".into());
    }
    if r.pressure <= 0.0 {
        return Err(format!("pressure must be > 0, got {}", r.pressure));
    }
    if let Some(p) = prev {
        if r.timestamp <= p.timestamp {
            return Err(format!(
                "timestamp {} does not increase (previous {})",
                r.timestamp, p.timestamp
            ));
        }
    }
    Ok(())
}

/// Reads a `time_s,truth_m,sonar_m,pressure_pa` CSV, rejecting invalid rows with their line number.
pub fn load_log(path: &Path) -> Result<SensorLog> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(LOG_HEADER) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!(
                "expected header {}, found {}",
                LOG_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut records: Vec<SensorRecord> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let record: SensorRecord = row
            .deserialize(Some(&header))
            .map_err(|e| Error::Parse {
                path: path.into(),
                line,
                message: e.to_string(),
            })?;
        check_record(&record, records.last()).map_err(|message| Error::Parse {
            path: path.into(),
            line,
            message,
        })?;
        records.push(record);
    }
    Ok(SensorLog { records })
}

/// One sinusoidal component of the synthetic height trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude_m: f64,
    pub period_s: f64,
    pub phase_rad: f64,
}

/// Interval during which the vehicle holds the height reached at `start_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hover {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    pub mean_height_m: f64,
    pub components: Vec<Sinusoid>,
    pub hovers: Vec<Hover>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            mean_height_m: 1.5,
            components: vec![
                Sinusoid {
                    amplitude_m: 0.75,
                    period_s: 47.0,
                    phase_rad: 0.0,
                },
                Sinusoid {
                    amplitude_m: 0.4,
                    period_s: 13.3,
                    phase_rad: 1.1,
                },
                Sinusoid {
                    amplitude_m: 0.2,
                    period_s: 5.9,
                    phase_rad: 2.3,
                },
            ],
            hovers: vec![
                Hover {
                    start_s: 90.0,
                    end_s: 120.0,
                },
                Hover {
                    start_s: 310.0,
                    end_s: 345.0,
                },
            ],
        }
    }
}

impl TrajectorySpec {
    /// True height at time `t`, clamped at the ground.
    pub fn height(&self, t: f64) -> f64 {
        let held = self
            .hovers
            .iter()
            .find(|h| t >= h.start_s && t < h.end_s)
            .map_or(t, |h| h.start_s);
        let h = self.mean_height_m
            + self
                .components
                .iter()
                .map(|c| c.amplitude_m * (std::f64::consts::TAU * held / c.period_s + c.phase_rad).sin())
                .sum::<f64>();
        h.max(0.0)
    }
}

/// Configuration of the synthetic flight-log generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub trajectory: TrajectorySpec,
    /// Standard deviation of the sonar noise, m.
    pub sonar_noise_m: f64,
    /// Standard deviation of the pressure noise, Pa.
    pub pressure_noise_pa: f64,
    /// Altitude of the flying arena's floor above sea level, m.
    pub base_altitude_m: f64,
    pub constants: BarometricConstants,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration_s: 600.0,
            sample_rate_hz: 10.0,
            trajectory: TrajectorySpec::default(),
            sonar_noise_m: 0.29,
            pressure_noise_pa: 2.0,
            base_altitude_m: 30.0,
            constants: BarometricConstants::default(),
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl SynthConfig {
    pub fn noiseless() -> Self {
        Self {
            sonar_noise_m: 0.0,
            pressure_noise_pa: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("duration_s", self.duration_s),
            ("sample_rate_hz", self.sample_rate_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("sonar_noise_m", self.sonar_noise_m),
            ("pressure_noise_pa", self.pressure_noise_pa),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.base_altitude_m.is_finite() {
            return Err(Error::InvalidParams("base_altitude_m must be finite".into()));
        }
        if self
            .trajectory
            .components
            .iter()
            .any(|c| !(c.period_s > 0.0) || !c.amplitude_m.is_finite() || !c.phase_rad.is_finite())
        {
            return Err(Error::InvalidParams("trajectory component needs a positive period".into()));
        }
        let c = &self.constants;
        if [c.r, c.t_s, c.m, c.g, c.p_s].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams("barometric constants must be > 0".into()));
        }
        let n = (self.duration_s * self.sample_rate_hz).floor();
        if n < 1.0 {
            return Err(Error::InvalidParams("configuration yields no samples".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }
}

/// Generates a flight log: smooth true height, sonar = truth + noise, and
/// pressure from the barometric formula at `base_altitude_m + truth` plus noise.
pub fn synthesize_log(config: &SynthConfig) -> Result<SensorLog> {
    config.validate()?;
    let n = (config.duration_s * config.sample_rate_hz).floor() as usize;
    let mut stream = SeededStream::tagged(config.seed, StreamTag::SyntheticLog, 0);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let timestamp = i as f64 / config.sample_rate_hz;
        let truth = config.trajectory.height(timestamp);
        let sonar_noise = config.sonar_noise_m * stream.standard_normal();
        let pressure_noise = config.pressure_noise_pa * stream.standard_normal();
        let pressure =
            height_to_pressure(config.base_altitude_m + truth, &config.constants) + pressure_noise;
        records.push(SensorRecord {
            timestamp,
            truth_height: truth,
            sonar_height: truth + sonar_noise,
            pressure,
        });
    }
    SensorLog::new(records)
}
