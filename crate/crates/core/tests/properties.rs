use gaudin_core::determinant::{partition_overlap_det, partition_overlap_perm};
use gaudin_core::lambda::{quadratic_residual, solve_sector, ContinuationConfig};
use gaudin_core::model::{BasisOccupation, GaudinModel};
use gaudin_core::rapidity::{lambda_values_complex, RapiditySet};
use gaudin_core::{Axis, Dd};
use num_complex::Complex64;
use num_traits::Float;
use proptest::prelude::*;

fn levels(gaps: &[f64]) -> Vec<f64> {
    gaps.iter()
        .scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        })
        .collect()
}

fn subset(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn det_form_matches_permutation_sum(
        gaps in prop::collection::vec(0.3..1.3f64, 2..7),
        mask in 1u32..64,
        raw in prop::collection::vec((-1.0..1.0f64, 0.05..2.0f64), 6),
    ) {
        let eps = levels(&gaps);
        let n = eps.len();
        let occ = subset(mask, n);
        prop_assume!(!occ.is_empty());
        let m = occ.len();
        let model = GaudinModel::new(eps.clone(), 1.0).unwrap();
        let span = model.span();
        let rap = RapiditySet::new(
            raw[..m].iter().map(|&(re, im)| Complex64::new(eps[0] + (re + 0.5) * span, im * span)).collect(),
            Axis::Lambda,
        );
        let occ = BasisOccupation::new(occ, n).unwrap();
        let lam = lambda_values_complex(&model, &rap);
        let at: Vec<Complex64> = occ.sites().iter().map(|&s| lam[s]).collect();
        let d = partition_overlap_det(&model, &occ, &at).unwrap();
        let p = partition_overlap_perm(&model, &occ, &rap).unwrap();
        prop_assert!((d - p).norm() <= 1e-10 * d.norm().max(p.norm()), "{d} vs {p}");
    }

    #[test]
    fn solved_states_obey_the_sum_rule(
        gaps in prop::collection::vec(0.3..1.3f64, 1..6),
        mask in 0u32..32,
        g in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
    ) {
        let eps = levels(&gaps);
        let n = eps.len();
        let model = GaudinModel::new(eps, g).unwrap();
        let occ = BasisOccupation::new(subset(mask, n), n).unwrap();
        let st = solve_sector(&model, &occ, &ContinuationConfig::default()).unwrap();
        let res = quadratic_residual(&model, &st).iter().fold(0.0f64, |a, r| a.max(r.abs()));
        prop_assert!(res < 1e-10, "residual {res}");
        let count = g * st.values.iter().sum::<f64>() / 2.0;
        prop_assert!((count - occ.len() as f64).abs() < 1e-8, "count {count}");
    }

    #[test]
    fn dd_quotients_invert_products(a in -1e6..1e6f64, b in 1e-3..1e3f64, c in -1e-20..1e-20f64) {
        prop_assume!(a.abs() > 1e-6);
        let x = Dd::new(a) + Dd::new(c);
        let y = Dd::new(b) + Dd::new(b * 1e-17);
        let err = ((x / y) * y - x).abs() / x.abs();
        prop_assert!(err.hi() < 1e-30, "{err:?}");
    }
}
