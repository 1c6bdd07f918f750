mod common;

use common::simpson;
use sr_core::bell::{GhzContextualModel, ParityScenario};
use sr_core::ensemble::{
    estimate_probabilities, fair_sampling_gap, sample_ensemble, singlet_reference_model, tally_counts, AlwaysDetectModel,
    Axis, MeasurementSetting, Party, TableModel, TableRow,
};
use sr_core::statespace::{Observable, PropertyWindow};
use sr_core::Error;

const MILLION: u64 = 1_000_000;

fn alice(deg: f64) -> MeasurementSetting {
    MeasurementSetting::new(Party::A, Axis::in_plane_degrees(deg))
}

fn bob(deg: f64) -> MeasurementSetting {
    MeasurementSetting::new(Party::B, Axis::in_plane_degrees(deg))
}

fn spin() -> Observable {
    Observable::spin_along([0.0, 0.0, 1.0])
}

#[test]
fn sphere_samples_have_zero_mean() {
    let micro = sample_ensemble(&singlet_reference_model(), MILLION as usize, 11).unwrap();
    let mut mean = [0.0; 3];
    for v in &micro {
        for k in 0..3 {
            mean[k] += v[k] / MILLION as f64;
        }
    }
    assert!(mean.iter().all(|m| m.abs() < 0.005), "{mean:?}");
    assert!(micro.iter().all(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0).abs() < 1e-12));
}

/// With `u = a . lambda` uniform on [-1, 1], Alice registers with probability
/// `|u|` and reads `+1` when `u < 0`.
#[test]
fn singlet_detection_rates_match_quadrature() {
    let p_detect = simpson(|u| 0.5 * u.abs(), -1.0, 1.0, 2000);
    let p_plus = simpson(|u| 0.5 * u.abs(), -1.0, 0.0, 1000) / p_detect;
    assert!((p_detect - 0.5).abs() < 1e-9 && (p_plus - 0.5).abs() < 1e-9);

    let obs = spin();
    let window = PropertyWindow::new(&obs, &[1.0], false).unwrap();
    let counts = tally_counts(&singlet_reference_model(), &[alice(30.0)], &window, MILLION, 5).unwrap();
    assert!(counts.consistent() && counts.aggregate_identity_holds() && counts.cell_identity_holds());
    let est = estimate_probabilities(&counts).unwrap();
    assert!((est.p_detect - p_detect).abs() < 0.005, "{est:?}");
    assert!((est.conditional().unwrap() - p_plus).abs() < 0.005, "{est:?}");
    assert_eq!(est.p_total, est.p_detect * est.conditional().unwrap());
}

#[test]
fn partitioned_tallies_merge_exactly() {
    let obs = spin();
    let window = PropertyWindow::new(&obs, &[-1.0], false).unwrap();
    let model = singlet_reference_model();
    let ctx = [alice(0.0), bob(45.0)];
    let whole = tally_counts(&model, &ctx, &window, 10_000, 3).unwrap();
    let mut merged = sr_core::ensemble::tally_range(&model, &ctx, &window, 3, 6_000..10_000).unwrap();
    merged.merge(&sr_core::ensemble::tally_range(&model, &ctx, &window, 3, 0..2_500).unwrap());
    merged.merge(&sr_core::ensemble::tally_range(&model, &ctx, &window, 3, 2_500..6_000).unwrap());
    assert_eq!(whole, merged);
}

#[test]
fn ghz_contextual_cells_answer_all_or_nothing() {
    let model = GhzContextualModel::default();
    let scenario = ParityScenario::standard();
    let obs = spin();
    for k in 0..4 {
        for value in [1.0, -1.0] {
            let window = PropertyWindow::new(&obs, &[value], false).unwrap();
            let counts = tally_counts(&model, &scenario.settings(k), &window, 20_000, 9).unwrap();
            assert!(counts.dichotomy_holds(), "context {k}");
            assert!(counts.aggregate_identity_holds());
            assert!(counts.cells.len() <= 64);
        }
    }
}

#[test]
fn deterministic_table_satisfies_dichotomy() {
    let settings = vec![alice(0.0)];
    let rows = vec![
        TableRow { weight: 1.0, values: vec![1.0], detect: vec![1.0] },
        TableRow { weight: 2.0, values: vec![-1.0], detect: vec![0.0] },
        TableRow { weight: 1.0, values: vec![-1.0], detect: vec![1.0] },
    ];
    let model = TableModel::new("t", settings.clone(), rows).unwrap();
    let obs = spin();
    let window = PropertyWindow::new(&obs, &[1.0], false).unwrap();
    let counts = tally_counts(&model, &settings, &window, 40_000, 1).unwrap();
    assert!(counts.dichotomy_holds());
    let est = estimate_probabilities(&counts).unwrap();
    assert!((est.p_detect - 0.5).abs() < 0.01);
    assert!((est.conditional().unwrap() - 0.5).abs() < 0.015);
}

/// Full-ensemble frequency of `product = -1` at a 45 degree opening is
/// `1 - 45/180`; detection weighting by `|a . lambda|` pulls the detected
/// frequency to `(1 + cos 45)/2`.
#[test]
fn fair_sampling_fails_for_the_singlet_model() {
    let full = 1.0 - 45.0 / 180.0;
    let detected = (1.0 + (45f64).to_radians().cos()) / 2.0;
    let obs = spin();
    let window = PropertyWindow::new(&obs, &[-1.0], false).unwrap();
    let gap = fair_sampling_gap(&singlet_reference_model(), &[alice(0.0), bob(45.0)], &window, 200_000, 2).unwrap();
    assert!(gap.z_score > 5.0, "{gap:?}");
    assert!((gap.full_frequency - full).abs() < 5.0 * gap.full_stderr, "{gap:?}");
    assert!((gap.detected_frequency - detected).abs() < 5.0 * gap.detected_stderr, "{gap:?}");

    let fair = fair_sampling_gap(&AlwaysDetectModel, &[alice(0.0), bob(45.0)], &window, 200_000, 2).unwrap();
    assert_eq!(fair.z_score, 0.0);
}

#[test]
fn a0_windows_and_empty_ensembles_are_rejected() {
    let obs = spin();
    let window = PropertyWindow::new(&obs, &[1.0, 0.0], false).unwrap();
    let err = tally_counts(&singlet_reference_model(), &[alice(0.0)], &window, 10, 0).unwrap_err();
    assert!(matches!(err, Error::NoRepresentation));
    let window = PropertyWindow::new(&obs, &[1.0], false).unwrap();
    assert!(matches!(tally_counts(&singlet_reference_model(), &[alice(0.0)], &window, 0, 0), Err(Error::EmptyEnsemble)));
}
