use proptest::prelude::*;

use ssl_fusion::harness::{run_case_study, CaseStudyConfig, PrimaryCue};
use ssl_fusion::sensor::{height_to_pressure, pressure_to_height, synthesize_log, BarometricConstants, SynthConfig};

proptest! {
    #[test]
    fn barometric_round_trip(h in 0.0f64..=100.0) {
        let c = BarometricConstants::default();
        let back = pressure_to_height(height_to_pressure(h, &c), &c).unwrap();
        prop_assert!((back - h).abs() <= 1e-12 * h.max(1.0), "{} -> {}", h, back);
    }
}

fn quick(primary_cue: PrimaryCue) -> CaseStudyConfig {
    CaseStudyConfig {
        primary_cue,
        runs: 20,
        ..CaseStudyConfig::default()
    }
}

#[test]
fn more_sonar_noise_never_lowers_primary_error() {
    let maes: Vec<f64> = [0.1, 0.29, 0.6]
        .into_iter()
        .map(|sonar_noise_m| {
            let log = synthesize_log(&SynthConfig {
                sonar_noise_m,
                ..SynthConfig::default()
            })
            .unwrap();
            run_case_study(&log, &quick(PrimaryCue::Sonar)).unwrap().mean_mae_primary
        })
        .collect();
    assert!(maes.windows(2).all(|w| w[0] <= w[1]), "{maes:?}");
}

#[test]
fn noiseless_log() {
    let log = synthesize_log(&SynthConfig::noiseless()).unwrap();
    let report = run_case_study(&log, &quick(PrimaryCue::Sonar)).unwrap();
    assert_eq!(report.mean_mae_primary, 0.0);
    // kNN interpolation error remains even without sensor noise
    assert!(report.mean_mae_secondary < 0.01, "{}", report.mean_mae_secondary);
    for r in &report.runs {
        // x_g = t, so the fused error is alpha times the secondary error
        let alpha = r.sigma_g2 / (r.sigma_g2 + r.s_hat);
        assert!((r.mae_fused - alpha * r.mae_secondary).abs() < 1e-12, "{r:?}");
        assert!(r.mae_fused < 1e-5, "{r:?}");
    }
    assert_eq!(report.success_rate, 0.0);
}

#[test]
fn case_study_is_reproducible_and_seed_sensitive() {
    let log = synthesize_log(&SynthConfig::default()).unwrap();
    let config = quick(PrimaryCue::Barometer);
    let a = serde_json::to_string(&run_case_study(&log, &config).unwrap()).unwrap();
    let b = serde_json::to_string(&run_case_study(&log, &config).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = CaseStudyConfig { seed: 43, ..config };
    let c = serde_json::to_string(&run_case_study(&log, &other).unwrap()).unwrap();
    assert_ne!(a, c);
}
