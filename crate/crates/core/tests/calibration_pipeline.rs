//! Cross-module behavior on synthetic sets with known ground truth.

use calim_core::{
    fit_histogram_binning, fit_isotonic, fit_linear_scaling, generate, reliability_table,
    BinEdges, BinningScheme, CalibrationMap, LinearScaling, MetricsReport, ScalingMode,
    SynthConfig,
};

fn ece_of(ps: &calim_core::PredictionSet) -> f64 {
    let edges = BinEdges::equal_width(15).unwrap();
    calim_core::ece(&reliability_table(ps, &edges).unwrap())
}

fn fitted_temperature(map: &CalibrationMap) -> f64 {
    match map {
        CalibrationMap::LinearLogit(LinearScaling::Temperature { t }) => *t,
        other => panic!("expected temperature map, got {}", other.method()),
    }
}

#[test]
fn temperature_fit_recovers_doubled_logit_scale() {
    let calib = generate(&SynthConfig::distorted(10_000, 10, 2.0, 2.0, 1)).unwrap();
    let (map, report) = fit_linear_scaling(&calib, ScalingMode::Temperature).unwrap();
    let t = fitted_temperature(&map);
    assert!((t - 2.0).abs() / 2.0 < 0.05, "t = {t}");
    assert!(report.converged);
    assert!(report.final_nll <= report.initial_nll);
}

#[test]
fn temperature_fit_on_calibrated_set_is_near_identity() {
    let calib = generate(&SynthConfig::calibrated(10_000, 10, 2.0, 2)).unwrap();
    let (map, _) = fit_linear_scaling(&calib, ScalingMode::Temperature).unwrap();
    let t = fitted_temperature(&map);
    assert!((t - 1.0).abs() < 0.05, "t = {t}");
}

#[test]
fn applying_fitted_temperature_restores_held_out_calibration() {
    let calib = generate(&SynthConfig::distorted(10_000, 10, 2.0, 2.0, 3)).unwrap();
    let test = generate(&SynthConfig::distorted(10_000, 10, 2.0, 2.0, 103)).unwrap();
    let (map, _) = fit_linear_scaling(&calib, ScalingMode::Temperature).unwrap();
    let calibrated = map.apply(&test).unwrap();
    assert!(ece_of(&test) > 0.05, "raw set unexpectedly calibrated");
    assert!(ece_of(&calibrated) < 0.02, "ece = {}", ece_of(&calibrated));
}

#[test]
fn every_method_improves_an_overconfident_set() {
    let calib = generate(&SynthConfig::distorted(10_000, 10, 2.0, 2.0, 4)).unwrap();
    let test = generate(&SynthConfig::distorted(10_000, 10, 2.0, 2.0, 104)).unwrap();
    let raw = ece_of(&test);
    let maps = vec![
        fit_histogram_binning(&calib, 20, BinningScheme::EqualWidth).unwrap(),
        fit_isotonic(&calib).unwrap(),
        fit_linear_scaling(&calib, ScalingMode::Temperature).unwrap().0,
        fit_linear_scaling(&calib, ScalingMode::Vector).unwrap().0,
        fit_linear_scaling(&calib, ScalingMode::VectorBias).unwrap().0,
    ];
    for map in maps {
        let after = ece_of(&map.apply(&test).unwrap());
        assert!(
            after < 0.5 * raw,
            "{} only reached {after} from {raw}",
            map.method()
        );
    }
}

#[test]
fn report_on_identity_scaled_set_matches_raw() {
    let ps = generate(&SynthConfig::calibrated(500, 4, 1.5, 9)).unwrap();
    let identity = CalibrationMap::LinearLogit(LinearScaling::Temperature { t: 1.0 });
    let out = identity.apply(&ps).unwrap();
    let a = MetricsReport::with_defaults(&ps).unwrap();
    let b = MetricsReport::with_defaults(&out).unwrap();
    assert!((a.ece - b.ece).abs() < 1e-12);
    assert!((a.nll - b.nll).abs() < 1e-12);
    assert!((a.brier - b.brier).abs() < 1e-12);
}
