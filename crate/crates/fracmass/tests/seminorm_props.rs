mod common;

use common::*;
use fracmass::seminorm::{gagliardo_qomega, gagliardo_with, interior_interior, SeminormOptions};
use fracmass::{QuadratureSpec, RadialProfile, Region, ScalarField};
use proptest::prelude::*;

fn spec(seed: u64) -> QuadratureSpec {
    QuadratureSpec::default().with_budget(200_000).with_seed(seed)
}

fn omega() -> impl Strategy<Value = Region> {
    prop_oneof![
        (0.5..1.5f64).prop_map(|r| Region::ball(vec![0.0, 0.0], r)),
        (0.5..1.5f64, 0.5..1.5f64).prop_map(|(w, h)| Region::Cuboid { lo: vec![-w, -h], hi: vec![w, h] }),
    ]
}

fn bump(r: f64, at: Vec<f64>) -> ScalarField {
    ScalarField::RadialAngular { profile: RadialProfile::Bump { radius: r }, angular: fracmass::AngularFunction::Constant(1.0) }.shifted(at)
}

fn agree(a: &fracmass::EstimateWithError, b: &fracmass::EstimateWithError) -> bool {
    (a.value - b.value).abs() <= 4.0 * (a.error + b.error) + 1e-9 * a.value.abs().max(b.value.abs())
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn swapping_roles_is_seed_paired(f in angular_field2(), om in omega(), s in 0.1..0.45f64, p in 1..3u32, seed in any::<u64>()) {
        let spec = spec(seed);
        let a = gagliardo_with(&f, &om, 2, s, p, &SeminormOptions::default(), &spec).unwrap();
        let opts = SeminormOptions { swap_roles: true, ..Default::default() };
        let b = gagliardo_with(&f, &om, 2, s, p, &opts, &spec).unwrap();
        prop_assert!((a.total.value - b.total.value).abs() <= 1e-12 * a.total.value.abs());
    }

    #[test]
    fn translation_is_covariant(f in angular_field2(), om in omega(), s in 0.1..0.45f64, dx in -2.0..2.0f64, dy in -2.0..2.0f64, seed in any::<u64>()) {
        let a = gagliardo_with(&f, &om, 2, s, 1, &SeminormOptions::default(), &spec(seed)).unwrap();
        let g = f.clone().shifted(vec![dx, dy]);
        let om2 = om.clone().shifted(vec![dx, dy]);
        let b = gagliardo_with(&g, &om2, 2, s, 1, &SeminormOptions::default(), &spec(seed ^ 1)).unwrap();
        prop_assert!(agree(&a.total, &b.total), "{:?} vs {:?}", a.total, b.total);
    }

    #[test]
    fn adding_a_constant_changes_nothing(c in -3.0..3.0f64, r in 0.2..0.4f64, s in 0.1..0.9f64, p in 1..3u32, seed in any::<u64>()) {
        let om = Region::unit_ball(2);
        let f = bump(r, vec![0.3, -0.2]);
        let g = ScalarField::Sum(vec![f.clone(), ScalarField::Constant(c)]);
        let a = gagliardo_with(&f, &om, 2, s, p, &SeminormOptions::default(), &spec(seed)).unwrap();
        let b = gagliardo_with(&g, &om, 2, s, p, &SeminormOptions::default(), &spec(seed)).unwrap();
        prop_assert!(agree(&a.total, &b.total), "{:?} vs {:?}", a.total, b.total);
    }

    #[test]
    fn doubling_the_radius_keeps_the_total(f in angular_field2(), om in omega(), s in 0.1..0.45f64, seed in any::<u64>()) {
        let r = fracmass::seminorm::default_radius(&f, &om).unwrap();
        let a = gagliardo_qomega(&f, &om, 2, s, 1, r, &spec(seed)).unwrap();
        let b = gagliardo_qomega(&f, &om, 2, s, 1, 2.0 * r, &spec(seed)).unwrap();
        prop_assert!(agree(&a.total, &b.total), "{:?} vs {:?}", a.total, b.total);
    }

    #[test]
    fn interior_energy_shrinks_with_s(a in -1.0..1.0f64, b in -1.0..1.0f64, r in 0.3..1.0f64, seed in any::<u64>()) {
        let om = Region::unit_ball(2);
        let f = ScalarField::Sum(vec![ScalarField::affine(&[a, b], 0.0), bump(r, vec![0.1, 0.0])]);
        let spec = spec(seed);
        let half = interior_interior(&f, &om, 2, 0.5, 2, &spec).unwrap();
        for s in [1e-1, 1e-2, 1e-3] {
            let v = interior_interior(&f, &om, 2, s, 2, &spec).unwrap();
            let bound = 2f64.powf(2.0 * (0.5 - s)) * (half.value + 4.0 * half.error);
            prop_assert!(v.value <= bound + 4.0 * v.error, "s={s}: {:?} vs {bound}", v);
        }
    }
}
