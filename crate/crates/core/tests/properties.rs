//! Property tests of the structural invariants.

use proptest::prelude::*;
use std::f64::consts::PI;

use winfree_core::model::{vector_field, EnsembleParams, EnsembleState, SimplifiedModel};
use winfree_core::observables::{mean_dispersion, order_d, order_r};

const TAU: f64 = 2.0 * PI;

fn phases(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn deviation_between_half_dispersion_and_dispersion(x in phases(24)) {
        let (_, delta) = mean_dispersion(&x).unwrap();
        let d = order_d(&x).unwrap();
        prop_assert!(d <= delta + 1e-12);
        prop_assert!(d >= delta / 2.0 - 1e-12);
    }
}

proptest! {
    #[test]
    fn field_is_invariant_under_full_turns(
        x in phases(16),
        kappa in 0.0f64..2.0,
        beta in 0.0f64..PI,
    ) {
        let model = SimplifiedModel::new(beta).unwrap().model_spec();
        let params = EnsembleParams::new(kappa, 0.0, vec![1.0; x.len()]).unwrap();
        let base = vector_field(&EnsembleState::new(0.0, x.clone()), &params, &model).unwrap();
        let shifted_x: Vec<f64> = x.iter().map(|v| v + TAU).collect();
        let shifted = vector_field(&EnsembleState::new(0.0, shifted_x), &params, &model).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn field_commutes_with_permutations(
        x in phases(12),
        kappa in 0.0f64..2.0,
        rotate in 0usize..12,
    ) {
        let n = x.len();
        let gamma = 0.3;
        let omega: Vec<f64> = (0..n)
            .map(|i| 1.0 - gamma + 2.0 * gamma * i as f64 / (n.max(2) - 1) as f64)
            .collect();
        let model = SimplifiedModel::new(0.4).unwrap().model_spec();
        let params = EnsembleParams::new(kappa, gamma, omega.clone()).unwrap();
        let base = vector_field(&EnsembleState::new(0.0, x.clone()), &params, &model).unwrap();

        let shift = rotate % n;
        let perm = |v: &[f64]| -> Vec<f64> {
            (0..n).map(|i| v[(i + shift) % n]).collect()
        };
        let params_p = EnsembleParams::new(kappa, gamma, perm(&omega)).unwrap();
        let permuted =
            vector_field(&EnsembleState::new(0.0, perm(&x)), &params_p, &model).unwrap();
        let expected = perm(&base);
        for (a, b) in permuted.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn order_modulus_within_unit_interval_and_shift_invariant(
        x in phases(20),
        shift in -20.0f64..20.0,
    ) {
        let r = order_r(&x).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let r2 = order_r(&shifted).unwrap();
        prop_assert!((r - r2).abs() < 1e-12, "global phase shift changed r: {r} vs {r2}");
    }

    #[test]
    fn lift_observables_translation_invariant(
        x in phases(20),
        c in -50.0f64..50.0,
    ) {
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let (_, delta) = mean_dispersion(&x).unwrap();
        let (_, delta_s) = mean_dispersion(&shifted).unwrap();
        prop_assert!((delta - delta_s).abs() < 1e-10);
        let d = order_d(&x).unwrap();
        let d_s = order_d(&shifted).unwrap();
        prop_assert!((d - d_s).abs() < 1e-10);
    }
}
