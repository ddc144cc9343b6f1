mod common;

use common::*;
use fracmass::limits::{binomial_sum, f0_main, interaction_energy, limit_report, perimeter_limit};
use fracmass::{Region, ScalarField};
use proptest::prelude::*;

fn omega() -> impl Strategy<Value = Region> {
    prop_oneof![
        (0.3..1.5f64).prop_map(|r| Region::ball(vec![0.0, 0.0], r)),
        (0.3..1.5f64, 0.3..1.5f64).prop_map(|(w, h)| Region::Cuboid { lo: vec![-w, -h], hi: vec![w, h] }),
    ]
}

fn indicator_region() -> impl Strategy<Value = Region> {
    prop_oneof![sector(), half_plane()]
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn binomial_sum_equals_interaction_energy(f in angular_field2(), om in omega()) {
        let a = f0_main(&f, &om, 2).unwrap();
        let b = interaction_energy(&f, &om, 2, 64).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        let c = binomial_sum(&f, &om, 2, 2).unwrap();
        prop_assert!((a - c).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {c}");
    }

    #[test]
    fn indicator_limit_is_the_perimeter_limit(e in indicator_region(), om in omega()) {
        let f = ScalarField::indicator(e.clone());
        let a = f0_main(&f, &om, 2).unwrap();
        let b = perimeter_limit(&e, &om, 2).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn report_routes_agree(e in indicator_region(), om in omega()) {
        let r = limit_report(&ScalarField::indicator(e), &om, 2).unwrap();
        prop_assert_eq!(r.consistency_deltas.len(), 3);
        for (name, delta) in &r.consistency_deltas {
            prop_assert!(*delta <= 1e-6, "{name}: {delta}");
        }
    }

    #[test]
    fn even_limits_are_nonnegative(f in angular_field2(), om in omega(), half_p in 1..4u32) {
        let v = binomial_sum(&f, &om, 2 * half_p, 2).unwrap();
        prop_assert!(v >= -1e-9, "{v}");
        prop_assert!(interaction_energy(&f, &om, 2, 64).unwrap() >= -1e-9);
    }
}
