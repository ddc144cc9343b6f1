mod common;

use common::*;
use fracmass::geometry::unit_ball_volume;
use fracmass::{sphere_measure, QuadratureSpec, Region};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn boolean_algebra_is_pointwise(r in region2(), s in region2(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let not_r = Region::Complement(Box::new(r.clone()));
        let union = Region::Union(vec![r.clone(), s.clone()]);
        let inter = Region::Intersection(vec![r.clone(), s.clone()]);
        for _ in 0..10_000 {
            let x = random_point(&mut g, 2, 4.0);
            let (a, b) = (r.contains(&x, 2).unwrap(), s.contains(&x, 2).unwrap());
            prop_assert_eq!(not_r.contains(&x, 2).unwrap(), !a);
            prop_assert_eq!(union.contains(&x, 2).unwrap(), a || b);
            prop_assert_eq!(inter.contains(&x, 2).unwrap(), a && b);
        }
    }

    #[test]
    fn volume_is_additive(a in prop_oneof![ball2(), box2()], b in prop_oneof![ball2(), box2()]) {
        let spec = QuadratureSpec::default();
        let va = a.volume_with(2, &spec).unwrap();
        let vb = b.volume_with(2, &spec).unwrap();
        let vu = Region::Union(vec![a.clone(), b.clone()]).volume_with(2, &spec).unwrap();
        let vi = Region::Intersection(vec![a, b]).volume_with(2, &spec).unwrap();
        let lhs = va.add(vb);
        let rhs = vu.add(vi);
        let err = lhs.error + rhs.error;
        prop_assert!((lhs.value - rhs.value).abs() <= 4.0 * err + 1e-12, "{:?} {:?}", lhs, rhs);
    }

    #[test]
    fn boundary_distance_is_a_lower_bound(r in region2(), seed in any::<u64>()) {
        let mut g = rng(seed);
        // find an interior point
        let x = (0..2000).map(|_| random_point(&mut g, 2, 4.0)).find(|x| r.inside(x));
        prop_assume!(x.is_some());
        let x = x.unwrap();
        let dist = r.distance_to_boundary(&x).unwrap();
        prop_assume!(dist.is_finite());
        for _ in 0..1000 {
            let th: f64 = g.gen_range(0.0..std::f64::consts::TAU);
            for k in 1..=32 {
                let t = dist * (1.0 - 1e-9) * k as f64 / 32.0;
                let y = [x[0] + t * th.cos(), x[1] + t * th.sin()];
                prop_assert!(r.inside(&y), "left the region at {t} < {dist} along {th}");
            }
        }
    }
}

#[test]
fn sphere_measure_matches_gamma_formula() {
    for d in 1..=3 {
        let h = d as f64 / 2.0;
        let expected = d as f64 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h + 1.0);
        assert!((sphere_measure(d).value - expected).abs() < 1e-13 * expected);
        assert!((unit_ball_volume(d) * d as f64 - expected).abs() < 1e-13 * expected);
    }
}

#[test]
fn distance_outside_is_rejected() {
    let r = Region::unit_ball(2);
    assert!(r.distance_to_boundary(&[2.0, 0.0]).is_err());
}
