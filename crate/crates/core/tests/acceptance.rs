//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ssl_fusion::cli;
use ssl_fusion::estimation::{estimate_conditional_variance_windowed, fit_knn, fit_linear, Window};
use ssl_fusion::harness::{
    analyze_distribution, ks_statistic_uniform, run_case_study, table1_params, verify_theory,
    CaseStudyConfig, DistOptions, PrimaryCue, VerifyOptions,
};
use ssl_fusion::model::{draw, ModelParams};
use ssl_fusion::rng::SeededStream;
use ssl_fusion::sensor::{height_to_pressure, pressure_to_height, synthesize_log, BarometricConstants, SynthConfig};
use ssl_fusion::theory::{
    expected_error_fused, sigma_f2_threshold, sigma_f2_threshold_checked, slope, theory_report,
    conditional_variance, Threshold,
};
use ssl_fusion::DEFAULT_SEED;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            summary
        } else {
            format!("{summary}; {}", failures.join("; "))
        },
    }
}

fn within_time(failures: &mut Vec<String>, elapsed: Duration, limit: Duration) {
    if elapsed >= limit {
        failures.push(format!("took {elapsed:.2?}, limit {limit:?}"));
    }
}

fn table1_reproduction() -> Outcome {
    let start = Instant::now();
    let expected = [(1.00, 0.49), (1.00, 1.15), (1.00, 0.18), (1.00, 0.25)];
    let opts = VerifyOptions::default();
    let mut failures = Vec::new();
    let mut worst_se: f64 = 0.0;
    for (params, (primary, fused)) in table1_params().iter().zip(expected) {
        let r = theory_report(params).unwrap();
        if (r.e_primary - primary).abs() > 0.005 || (r.e_fused - fused).abs() > 0.005 {
            failures.push(format!("{params:?}: theory ({}, {})", r.e_primary, r.e_fused));
        }
        let small = verify_theory(params, 10_000, DEFAULT_SEED, &opts).unwrap();
        for (emp, th) in [
            (small.mse_primary_empirical, small.mse_primary_theory),
            (small.mse_fused_empirical, small.mse_fused_theory),
        ] {
            if (emp - th).abs() > 0.08 {
                failures.push(format!("{params:?} n=1e4: {emp:.4} vs {th:.4}"));
            }
        }
        let large = verify_theory(params, 100_000, DEFAULT_SEED, &opts).unwrap();
        for (emp, th, se) in [
            (large.mse_primary_empirical, large.mse_primary_theory, large.se_primary),
            (large.mse_fused_empirical, large.mse_fused_theory, large.se_fused),
        ] {
            let z = (emp - th).abs() / se;
            worst_se = worst_se.max(z);
            if z > 4.0 {
                failures.push(format!("{params:?} n=1e5: {emp:.4} vs {th:.4} is {z:.2} SE"));
            }
        }
    }
    let elapsed = start.elapsed();
    within_time(&mut failures, elapsed, Duration::from_secs(10));
    outcome(failures, format!("worst n=1e5 deviation {worst_se:.2} SE, {elapsed:.2?}"))
}

fn threshold_check() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let value = sigma_f2_threshold(6.25, 1.0).unwrap().value().unwrap();
    let check = sigma_f2_threshold_checked(6.25, 1.0).unwrap().unwrap();
    if (value - 11.57).abs() > 0.01 {
        failures.push(format!("threshold {value}"));
    }
    if check.relative_gap() > 1e-6 {
        failures.push(format!("closed form {} vs bisection {}", check.closed_form, check.bisection));
    }
    let elapsed = start.elapsed();
    within_time(&mut failures, elapsed, Duration::from_secs(1));
    outcome(
        failures,
        format!("threshold {value:.6}, bisection gap {:.1e}, {elapsed:.2?}", check.relative_gap()),
    )
}

fn condition_grid() -> Outcome {
    let grid = [0.1, 0.25, 1.0, 4.0, 25.0];
    let f_grid: Vec<f64> = (-3..=3).map(|e| 10f64.powi(e)).collect();
    let mut failures = Vec::new();
    let (mut dominance, mut flips) = (0, 0);
    for t2 in grid {
        for g2 in grid {
            if t2 <= g2 {
                for &f2 in &f_grid {
                    let e = expected_error_fused(&ModelParams::new(t2, g2, f2).unwrap()).unwrap();
                    dominance += 1;
                    if !(e < g2) {
                        failures.push(format!("({t2},{g2},{f2}): e_fused {e} >= {g2}"));
                    }
                }
            } else {
                let Threshold::Finite(c) = sigma_f2_threshold(t2, g2).unwrap() else {
                    failures.push(format!("({t2},{g2}): no finite threshold"));
                    continue;
                };
                let gain = |f2: f64| g2 - expected_error_fused(&ModelParams::new(t2, g2, f2).unwrap()).unwrap();
                flips += 1;
                if !(gain(0.9 * c) > 0.0 && gain(1.1 * c) < 0.0) {
                    failures.push(format!("({t2},{g2}): no sign flip around {c}"));
                }
            }
        }
    }
    outcome(failures, format!("{dominance} dominance points, {flips} threshold flips"))
}

fn estimator_consistency() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for params in table1_params() {
        let data = draw(&params, 100_000, DEFAULT_SEED).unwrap();
        let pairs: Vec<(f64, f64)> = data.samples.iter().map(|s| (s.x_f, s.x_g)).collect();
        let a_hat = fit_linear(&pairs).unwrap().a;
        let a = slope(&params).unwrap();
        worst = worst.max((a_hat - a).abs());
        if (a_hat - a).abs() > 0.01 {
            failures.push(format!("{params:?}: slope {a_hat} vs {a}"));
        }
    }
    let params = ModelParams::new(6.25, 1.0, 1.0).unwrap();
    let data = draw(&params, 1_000_000, DEFAULT_SEED).unwrap();
    let pairs: Vec<(f64, f64)> = data.samples.iter().map(|s| (s.x_f, s.x_g)).collect();
    let map = fit_linear(&pairs).unwrap();
    let proxy_pairs: Vec<(f64, f64)> = data.samples.iter().map(|s| (map.predict(s.x_f), s.x_g)).collect();
    let s_hat = estimate_conditional_variance_windowed(&proxy_pairs, &Window::default()).unwrap();
    let s = conditional_variance(&params).unwrap();
    let rel = (s_hat - s).abs() / s;
    if rel > 0.05 {
        failures.push(format!("windowed {s_hat} vs {s}"));
    }
    outcome(
        failures,
        format!("worst slope error {worst:.4}, windowed proxy {s_hat:.4} vs {s:.4} ({:.1}%)", 100.0 * rel),
    )
}

fn brute_force_knn(pairs: &[(f64, f64)], k: usize, x: f64) -> f64 {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (pairs[i].0, pairs[j].0);
        (a - x).abs().total_cmp(&(b - x).abs()).then(a.total_cmp(&b)).then(i.cmp(&j))
    });
    order[..k].iter().map(|&i| pairs[i].1).sum::<f64>() / k as f64
}

fn knn_oracle() -> Outcome {
    let mut rng = SeededStream::new(DEFAULT_SEED, 5);
    let mut failures = Vec::new();
    let instances = 1000;
    for case in 0..instances {
        let coarse = rng.below(2) == 0;
        let value = |rng: &mut SeededStream, width: f64| {
            if coarse {
                (rng.below(2 * width as u64 * 4) as f64) * 0.25 - width
            } else {
                (2.0 * rng.uniform() - 1.0) * width
            }
        };
        let n = 1 + rng.below(200) as usize;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (value(&mut rng, 5.0), 20.0 * rng.uniform() - 10.0))
            .collect();
        let k = 1 + rng.below(n.min(10) as u64) as usize;
        let x = value(&mut rng, 6.0);
        let got = fit_knn(&pairs, k).unwrap().predict(x);
        let want = brute_force_knn(&pairs, k, x);
        if got.to_bits() != want.to_bits() {
            failures.push(format!("instance {case}: {got} vs {want}"));
        }
    }
    let mismatches = failures.len();
    failures.truncate(3);
    outcome(failures, format!("{mismatches} mismatches in {instances} instances"))
}

fn barometric() -> Outcome {
    let c = BarometricConstants::default();
    let mut failures = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for i in 0..=10_000 {
        let h = i as f64 * 0.01;
        let back = pressure_to_height(height_to_pressure(h, &c), &c).unwrap();
        let err = (back - h).abs();
        worst_abs = worst_abs.max(err);
        if h >= 1.0 {
            worst_rel = worst_rel.max(err / h);
        }
        if err > 1e-12 * h.max(1.0) {
            failures.push(format!("h={h}: {back}"));
        }
    }
    failures.truncate(3);
    // R*T_s/(M*g) evaluated separately in double precision
    let k = 8434.657654661189;
    if (k - 8434.5f64).abs() > 0.5 || (c.scale_height() - k).abs() > 1e-9 * k {
        failures.push(format!("scale height {}", c.scale_height()));
    }
    let h = pressure_to_height(100_000.0, &c).unwrap();
    let expected = k * (101_325.0f64 / 100_000.0).ln();
    if (h - expected).abs() > 1e-9 * expected || (h - 111.0).abs() > 0.05 {
        failures.push(format!("h(100 kPa) = {h}, expected {expected}"));
    }
    outcome(
        failures,
        format!("worst relative error {worst_rel:.1e} (h >= 1 m), worst absolute {worst_abs:.1e} m, h(100 kPa) = {h:.4} m"),
    )
}

fn case_study() -> Outcome {
    let start = Instant::now();
    let log = synthesize_log(&SynthConfig::default()).unwrap();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for cue in [PrimaryCue::Sonar, PrimaryCue::Barometer] {
        let config = CaseStudyConfig {
            primary_cue: cue,
            ..CaseStudyConfig::default()
        };
        let r = run_case_study(&log, &config).unwrap();
        summary.push(format!(
            "{cue:?}: success {:.0}%, MAE primary/secondary/fused {:.3}/{:.3}/{:.3}",
            100.0 * r.success_rate,
            r.mean_mae_primary,
            r.mean_mae_secondary,
            r.mean_mae_fused
        ));
        if r.success_rate < 0.9 {
            failures.push(format!("{cue:?} success rate {}", r.success_rate));
        }
        if !(0.15..=0.30).contains(&r.mean_mae_secondary) {
            failures.push(format!("{cue:?} secondary MAE {}", r.mean_mae_secondary));
        }
    }
    let elapsed = start.elapsed();
    within_time(&mut failures, elapsed, Duration::from_secs(60));
    outcome(failures, format!("{}; {elapsed:.2?}", summary.join("; ")))
}

fn randomization_calibration() -> Outcome {
    let repetitions = 200;
    let opts = DistOptions {
        bins: None,
        resamples: 1000,
        seed: DEFAULT_SEED,
    };
    let p_values: Vec<f64> = (0..repetitions)
        .map(|i| {
            let mut rng = SeededStream::new(DEFAULT_SEED, 10_000 + i);
            let xs: Vec<f64> = (0..500).map(|_| rng.normal(2.0, 9.0)).collect();
            analyze_distribution(&xs, &opts).unwrap().p_value
        })
        .collect();
    let ks = ks_statistic_uniform(&p_values);
    // asymptotic one-sample KS critical value at the 1% level
    let critical = 1.6276 / (repetitions as f64).sqrt();
    let mut failures = Vec::new();
    if ks >= critical {
        failures.push(format!("KS {ks:.4} >= {critical:.4}"));
    }
    let mut rng = SeededStream::new(DEFAULT_SEED, 9);
    let bimodal: Vec<f64> = (0..1000)
        .map(|i| rng.normal(if i % 2 == 0 { -4.0 } else { 4.0 }, 1.0))
        .collect();
    let p = analyze_distribution(&bimodal, &DistOptions::default()).unwrap().p_value;
    if p >= 0.01 {
        failures.push(format!("bimodal p = {p}"));
    }
    outcome(failures, format!("KS {ks:.4} (critical {critical:.4}), bimodal p = {p}"))
}

fn cli_output(args: &[&str]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("ssl-fusion").chain(args.iter().copied()), &mut out, &mut err);
    assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let log = log.to_str().unwrap();
    let values = dir.path().join("values.txt");
    let mut rng = SeededStream::new(DEFAULT_SEED, 3);
    let text: String = (0..300).map(|_| format!("{}\n", rng.standard_normal())).collect();
    std::fs::write(&values, text).unwrap();
    let values = values.to_str().unwrap();

    let mut failures = Vec::new();
    let synth = |path: &str| {
        cli_output(&["synth", "--out", path]);
        std::fs::read(path).unwrap()
    };
    let first_log = synth(log);
    if synth(log) != first_log {
        failures.push("synth log differs".to_string());
    }
    let suites: [&[&str]; 6] = [
        &["theory", "6.25", "1", "16"],
        &["verify", "6.25", "1", "1", "--n", "20000"],
        &["table1"],
        &["casestudy", log],
        &["casestudy", log, "--primary", "barometer"],
        &["analyze", values, "--resamples", "2000"],
    ];
    for args in suites {
        if cli_output(args) != cli_output(args) {
            failures.push(format!("{args:?} differs"));
        }
    }
    outcome(failures, format!("{} suites rerun", suites.len() + 1))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("reference-triple reproduction", table1_reproduction),
        ("threshold check", threshold_check),
        ("dominance and threshold grid", condition_grid),
        ("estimator consistency", estimator_consistency),
        ("kNN oracle equivalence", knn_oracle),
        ("barometric round trip", barometric),
        ("case-study qualitative reproduction", case_study),
        ("randomization-test calibration", randomization_calibration),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        all &= o.pass;
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
