//! The `ssl-fusion` command line.
//!
//! Exit codes: 0 success, 1 internal or numerical failure, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimation::Window;
use crate::harness::{
    analyze_distribution, run_case_study, table1_params, verify_theory, CaseStudyConfig,
    DistOptions, PrimaryCue, ProxyEstimator, VerificationRow, VerifyOptions, DEFAULT_RESAMPLES,
    REPORT_SCHEMA_VERSION,
};
use crate::model::{draw, ModelParams};
use crate::sensor::{load_log, synthesize_log, SynthConfig};
use crate::theory::{theory_report, TheoryReport};
use crate::DEFAULT_SEED;

const DEFAULTS_HELP: &str = "\
Defaults:
  --seed 42                  fixed, never time-based
  --n 10000                  samples per Monte Carlo verification row
  --runs 100                 case-study repetitions
  --k 3                      kNN neighbours for the learned secondary cue
  --splits 0.8,0.1,0.1       train / validation / test fractions
  --window -0.05,0.05        x_g interval for the windowed proxy variance
  --resamples 10000          randomization-test repetitions";

#[derive(Debug, Parser)]
#[command(
    name = "ssl-fusion",
    version,
    about = "Fusion of a primary sensor cue with a self-supervised secondary cue",
    after_help = DEFAULTS_HELP
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON file with option defaults; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primary {
    Sonar,
    Barometer,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form errors, weights and thresholds for one parameter triple.
    Theory(ParamArgs),
    /// Simulate one parameter triple and compare empirical errors with theory.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Verify the four reference parameter triples.
    Table1 {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Draw a dataset from the model to CSV (plus a `.json` sidecar).
    Draw {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Generate a synthetic flight log CSV.
    Synth {
        /// Generator configuration (JSON); defaults when omitted.
        synth_config: Option<PathBuf>,
    },
    /// Run the repeated train/validation/test protocol on a flight log.
    Casestudy {
        log: PathBuf,
        #[arg(long, value_enum)]
        primary: Option<Primary>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Train, validation and test fractions, e.g. 0.8,0.1,0.1.
        #[arg(long, value_parser = parse_triple)]
        splits: Option<[f64; 3]>,
    },
    /// Compare a sample with the normal of equal mean and std.
    Analyze {
        /// CSV or one-value-per-line file.
        input: PathBuf,
        /// Column to analyze; `sonar_error` is derived from a flight log.
        #[arg(long)]
        column: Option<String>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        resamples: Option<usize>,
        /// Also write the histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(allow_negative_numbers = true)]
    pub sigma_t2: f64,
    #[arg(allow_negative_numbers = true)]
    pub sigma_g2: f64,
    #[arg(allow_negative_numbers = true)]
    pub sigma_f2: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Fixed x_g interval `lo,hi` for the proxy variance.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
}

/// Option defaults read from `--config`. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub n: Option<usize>,
    pub runs: Option<usize>,
    pub k: Option<usize>,
    pub splits: Option<[f64; 3]>,
    pub primary: Option<Primary>,
    pub window: Option<[f64; 2]>,
    pub bins: Option<usize>,
    pub resamples: Option<usize>,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_floats(s)?
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_floats(s)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        v => Err(format!("expected 2 comma-separated values, got {}", v.len())),
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    report: T,
}

fn envelope_json<T: Serialize>(kind: &str, report: T) -> Result<String, Error> {
    let env = Envelope {
        schema_version: REPORT_SCHEMA_VERSION,
        kind,
        report,
    };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Fit(_) | Error::InsufficientData(_) | Error::Degenerate(_) | Error::Numerical(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(e: Error) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(None) => 0,
        Ok(Some(output)) => match &cli.global.out {
            Some(path) => match fs::write(path, output) {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {}", Error::io(path, e));
                    2
                }
            },
            None => {
                let _ = stdout.write_all(output.as_bytes());
                0
            }
        },
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Error> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

fn params_of(p: &ParamArgs) -> Result<ModelParams, Error> {
    ModelParams::new(p.sigma_t2, p.sigma_g2, p.sigma_f2)
}

/// The rendered report, or `None` when the command wrote its own file.
fn execute(cli: &Cli) -> Result<Option<String>, Failure> {
    let cfg = load_config(cli.global.config.as_deref()).map_err(input_failure)?;
    let seed = cli.global.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let format = cli.global.format.or(cfg.format).unwrap_or(Format::Json);

    match &cli.command {
        Command::Theory(p) => {
            let report = theory_report(&params_of(p).map_err(input_failure)?).map_err(input_failure)?;
            render_theory(&report, format).map(Some)
        }
        Command::Verify { params, sim } => {
            let params = params_of(params).map_err(input_failure)?;
            let (n, opts) = sim_options(sim, &cfg);
            let row = verify_theory(&params, n, seed, &opts)?;
            render_rows("verify", &[row], format).map(Some)
        }
        Command::Table1 { sim } => {
            let (n, opts) = sim_options(sim, &cfg);
            let rows = table1_params()
                .iter()
                .map(|p| verify_theory(p, n, seed, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            render_rows("table1", &rows, format).map(Some)
        }
        Command::Draw { params, n } => {
            let params = params_of(params).map_err(input_failure)?;
            let n = n.or(cfg.n).unwrap_or(10_000);
            let out = cli.global.out.as_ref().ok_or_else(|| Failure {
                code: 2,
                message: "draw needs --out <csv path>".into(),
            })?;
            let ds = draw(&params, n, seed).map_err(input_failure)?;
            ds.save(out).map_err(input_failure)?;
            Ok(None)
        }
        Command::Synth { synth_config } => {
            let mut config = match synth_config {
                Some(path) => SynthConfig::from_json_file(path).map_err(input_failure)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = cli.global.seed.or(cfg.seed) {
                config.seed = s;
            }
            let out = cli.global.out.as_ref().ok_or_else(|| Failure {
                code: 2,
                message: "synth needs --out <csv path>".into(),
            })?;
            let log = synthesize_log(&config).map_err(input_failure)?;
            log.write_csv(out).map_err(input_failure)?;
            Ok(None)
        }
        Command::Casestudy {
            log,
            primary,
            runs,
            k,
            splits,
        } => {
            let log = load_log(log).map_err(input_failure)?;
            let defaults = CaseStudyConfig::default();
            let primary_cue = match primary.or(cfg.primary) {
                Some(Primary::Barometer) => PrimaryCue::Barometer,
                _ => PrimaryCue::Sonar,
            };
            let config = CaseStudyConfig {
                primary_cue,
                k: k.or(cfg.k).unwrap_or(defaults.k),
                splits: splits.or(cfg.splits).unwrap_or(defaults.splits),
                runs: runs.or(cfg.runs).unwrap_or(defaults.runs),
                seed,
                proxy: ProxyEstimator::Moments,
                ..defaults
            };
            config.validate().map_err(input_failure)?;
            let report = run_case_study(&log, &config)?;
            match format {
                Format::Json => envelope_json("casestudy", &report).map_err(Failure::from),
                Format::Text => Ok(report.to_text()),
                Format::Csv => Ok(report.runs_csv()),
            }
            .map(Some)
        }
        Command::Analyze {
            input,
            column,
            bins,
            resamples,
            histogram,
        } => {
            let values = read_values(input, column.as_deref()).map_err(input_failure)?;
            let opts = DistOptions {
                bins: bins.or(cfg.bins),
                resamples: resamples.or(cfg.resamples).unwrap_or(DEFAULT_RESAMPLES),
                seed,
            };
            let stats = analyze_distribution(&values, &opts).map_err(input_failure)?;
            if let Some(path) = histogram {
                fs::write(path, stats.histogram_csv()).map_err(|e| input_failure(Error::io(path, e)))?;
            }
            match format {
                Format::Json => envelope_json("analyze", &stats).map_err(Failure::from),
                Format::Text => Ok(stats.to_text()),
                Format::Csv => Ok(stats.histogram_csv()),
            }
            .map(Some)
        }
    }
}

fn sim_options(sim: &SimArgs, cfg: &CliConfig) -> (usize, VerifyOptions) {
    let n = sim.n.or(cfg.n).unwrap_or(10_000);
    let window = sim
        .window
        .or(cfg.window.map(|[lo, hi]| (lo, hi)))
        .map(|(lo, hi)| Window::Fixed { lo, hi })
        .unwrap_or_default();
    (n, VerifyOptions { window })
}

fn render_theory(report: &TheoryReport, format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => envelope_json("theory", report).map_err(Failure::from),
        Format::Text => Ok(format!(
            "sigma_t2             {}\nsigma_g2             {}\nsigma_f2             {}\n\
             slope a*             {:.6}\nproxy variance s*    {:.6}\nweights alpha, beta  {:.6}, {:.6}\n\
             error primary        {:.6}\nerror fused          {:.6}\nfavorable            {}{}\n\
             sigma_f2 threshold   {}\nsigma_yf2 threshold  {}\n",
            report.params.sigma_t2,
            report.params.sigma_g2,
            report.params.sigma_f2,
            report.a_star,
            report.s_star,
            report.alpha,
            report.beta,
            report.e_primary,
            report.e_fused,
            report.favorable,
            match report.condition {
                Some(c) => format!(" ({})", serde_json::to_value(c).unwrap().as_str().unwrap()),
                None => String::new(),
            },
            report.sigma_f2_threshold,
            report.sigma_yf2_threshold,
        )),
        Format::Csv => {
            let value = serde_json::to_value(report).map_err(Error::from)?;
            let mut out = String::from("field,value\n");
            for (k, v) in value.as_object().expect("struct serializes to object") {
                match v {
                    serde_json::Value::Object(inner) => {
                        for (ik, iv) in inner {
                            out.push_str(&format!("{k}.{ik},{iv}\n"));
                        }
                    }
                    serde_json::Value::String(s) => out.push_str(&format!("{k},{s}\n")),
                    other => out.push_str(&format!("{k},{other}\n")),
                }
            }
            Ok(out)
        }
    }
}

fn render_rows(kind: &str, rows: &[VerificationRow], format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => envelope_json(kind, rows).map_err(Failure::from),
        Format::Text => {
            let mut out = String::from(VerificationRow::TEXT_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&r.to_text_line());
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => {
            let mut out = String::from(
                "sigma_t2,sigma_g2,sigma_f2,n,seed,a_hat,s_hat,mse_primary_empirical,mse_primary_theory,se_primary,mse_fused_empirical,mse_fused_theory,se_fused\n",
            );
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.params.sigma_t2,
                    r.params.sigma_g2,
                    r.params.sigma_f2,
                    r.n,
                    r.seed,
                    r.a_hat,
                    r.s_hat,
                    r.mse_primary_empirical,
                    r.mse_primary_theory,
                    r.se_primary,
                    r.mse_fused_empirical,
                    r.mse_fused_theory,
                    r.se_fused
                ));
            }
            Ok(out)
        }
    }
}

/// Reads numeric values from a single-column file or a named CSV column.
fn read_values(path: &Path, column: Option<&str>) -> Result<Vec<f64>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| crate::model::csv_error(path, e))?;
    let mut rows = reader.records();
    let first = match rows.next() {
        Some(r) => r.map_err(|e| crate::model::csv_error(path, e))?,
        None => return Ok(Vec::new()),
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let header: Vec<String> = if has_header {
        first.iter().map(str::to_owned).collect()
    } else {
        (0..first.len()).map(|i| i.to_string()).collect()
    };

    enum Pick {
        Index(usize),
        SonarError { sonar: usize, truth: usize },
    }
    let find = |name: &str| header.iter().position(|h| h == name);
    let pick = match column {
        Some("sonar_error") if find("sonar_error").is_none() => match (find("sonar_m"), find("truth_m")) {
            (Some(sonar), Some(truth)) => Pick::SonarError { sonar, truth },
            _ => {
                return Err(Error::Usage(
                    "sonar_error needs sonar_m and truth_m columns".into(),
                ))
            }
        },
        Some(name) => Pick::Index(
            find(name).ok_or_else(|| Error::Usage(format!("no column named {name:?}")))?,
        ),
        None if header.len() == 1 => Pick::Index(0),
        None => {
            return Err(Error::Usage(format!(
                "input has {} columns; choose one with --column",
                header.len()
            )))
        }
    };

    let parse = |row: &csv::StringRecord, i: usize, line: u64| -> Result<f64, Error> {
        let field = row.get(i).unwrap_or("");
        field.parse::<f64>().map_err(|e| Error::Parse {
            path: path.into(),
            line,
            message: format!("{field:?}: {e}"),
        })
    };
    let mut values = Vec::new();
    let data_rows = std::iter::once(Ok(first))
        .filter(|_| !has_header)
        .chain(rows);
    for row in data_rows {
        let row = row.map_err(|e| crate::model::csv_error(path, e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        values.push(match pick {
            Pick::Index(i) => parse(&row, i, line)?,
            Pick::SonarError { sonar, truth } => parse(&row, sonar, line)? - parse(&row, truth, line)?,
        });
    }
    Ok(values)
}
