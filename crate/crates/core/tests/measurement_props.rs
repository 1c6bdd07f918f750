mod common;

use common::{modulus, polar, state};
use proptest::prelude::*;
use sr_core::linalg::{born_probability, c, StateVector, C64};
use sr_core::measurement::{
    evolve_premeasurement, fapp_compare, projection_postulate, recognize_state, select_detected, simulate_support_tests,
    MeasurementBranching,
};
use sr_core::statespace::Observable;

const K: usize = 3;

fn coefficients() -> impl Strategy<Value = Vec<C64>> {
    state(K).prop_map(|s| s.amplitudes().to_vec())
}

/// Transmission amplitudes bounded away from zero so something registers.
fn transmissions() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((0.05f64..=1.0, 0.0f64..6.3), K).prop_map(|v| v.into_iter().map(|(r, th)| polar(r, th)).collect())
}

fn norm(v: &StateVector) -> f64 {
    v.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn premeasurement_is_isometric(cs in coefficients(), ts in transmissions()) {
        let b = MeasurementBranching::standard(cs, ts, K, K + 1).unwrap();
        let chi = evolve_premeasurement(&b).unwrap();
        prop_assert!((norm(&chi) - 1.0).abs() < 1e-12);
        prop_assert!((b.detected_weight() + b.undetected_weight() - 1.0).abs() < 1e-12);
        prop_assert_eq!(chi.dims(), &[K, K + 1][..]);
    }

    /// The registered state is `sum c_i t_i |phi_i>|psi_i>` renormalized, so
    /// its Schmidt weights are `|c_i t_i|^2 / sum |c_j t_j|^2`.
    #[test]
    fn selected_state_weights_follow_branch_amplitudes(cs in coefficients(), ts in transmissions()) {
        let b = MeasurementBranching::standard(cs.clone(), ts.clone(), K, K + 1).unwrap();
        let s_f = select_detected(&evolve_premeasurement(&b).unwrap(), &b).unwrap();
        prop_assert!((norm(&s_f) - 1.0).abs() < 1e-12);
        let raw: Vec<f64> = cs.iter().zip(&ts).map(|(a, t)| (a * t).norm_sqr()).collect();
        let total: f64 = raw.iter().sum();
        let mut want: Vec<f64> = raw.iter().map(|w| w / total).filter(|w| *w >= 1e-12).collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let report = fapp_compare(&s_f, (K, K + 1)).unwrap();
        prop_assert_eq!(report.schmidt_weights.len(), want.len());
        for (g, w) in report.schmidt_weights.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9);
        }
        prop_assert!((b.detected_weight() - total).abs() < 1e-12);
    }

    #[test]
    fn mixture_matches_locally_but_not_on_the_support(cs in coefficients(), ts in transmissions()) {
        let b = MeasurementBranching::standard(cs, ts, K, K + 1).unwrap();
        let s_f = select_detected(&evolve_premeasurement(&b).unwrap(), &b).unwrap();
        let report = fapp_compare(&s_f, (K, K + 1)).unwrap();
        prop_assert!(report.local_prob_max_diff < 1e-9);
        prop_assert!((report.support_prob_pure - 1.0).abs() < 1e-12);
        let sum_p2: f64 = report.schmidt_weights.iter().map(|p| p * p).sum();
        prop_assert!((report.support_prob_mixture - sum_p2).abs() < 1e-9);
        if report.schmidt_weights.len() > 1 {
            prop_assert!(report.support_prob_mixture < 1.0 - 1e-9);
            prop_assert!(report.purity_gap > 1e-9);
        }
    }

    #[test]
    fn projection_lands_in_the_eigenspace(s in state(2), theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU, idx in 0usize..2) {
        let obs = Observable::spin_along_angles(theta, phi);
        let p = &obs.projectors()[idx];
        let prob = born_probability(&s, p).unwrap();
        match projection_postulate(&s, &obs, idx) {
            Ok(post) => {
                prop_assert!((born_probability(&post, p).unwrap() - 1.0).abs() < 1e-9);
                prop_assert!((norm(&post) - 1.0).abs() < 1e-12);
                let overlap = modulus(post.inner(&s).unwrap());
                prop_assert!((overlap * overlap - prob).abs() < 1e-9);
            }
            Err(_) => prop_assert!(prob < 1e-9),
        }
    }
}

#[test]
fn perfect_transmission_reproduces_the_textbook_result() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let b = MeasurementBranching::standard(vec![c(h, 0.0), c(h, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)], 2, 3).unwrap();
    let s_f = select_detected(&evolve_premeasurement(&b).unwrap(), &b).unwrap();
    let report = fapp_compare(&s_f, (2, 3)).unwrap();
    assert_eq!(report.schmidt_weights.len(), 2);
    assert!((report.support_prob_mixture - 0.5).abs() < 1e-12);
}

#[test]
fn invalid_branchings_are_rejected() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(MeasurementBranching::standard(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0); 2], 2, 3).is_err());
    assert!(MeasurementBranching::standard(vec![c(h, 0.0), c(h, 0.0)], vec![c(1.5, 0.0), c(1.0, 0.0)], 2, 3).is_err());
    assert!(MeasurementBranching::standard(vec![c(h, 0.0), c(h, 0.0)], vec![c(1.0, 0.0); 2], 2, 2).is_err());
    let nothing = MeasurementBranching::standard(vec![c(1.0, 0.0)], vec![c(0.0, 0.0)], 2, 2).unwrap();
    assert!(select_detected(&evolve_premeasurement(&nothing).unwrap(), &nothing).is_err());
}

#[test]
fn recognition_from_support_tests() {
    let plus = StateVector::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    let zero = StateVector::basis(2, 0);
    let same = simulate_support_tests(&plus, &plus, 0.3, 200, 4).unwrap();
    assert!(recognize_state(&same, 20));
    let other = simulate_support_tests(&zero, &plus, 0.3, 200, 4).unwrap();
    assert!(!recognize_state(&other, 20));
    let silent = simulate_support_tests(&plus, &plus, 0.0, 200, 4).unwrap();
    assert!(!recognize_state(&silent, 0));
}
