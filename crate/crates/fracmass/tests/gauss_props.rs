mod common;

use common::*;
use fracmass::asymptotics::{geometric_grid, sweep};
use fracmass::gausskernel::{closed_form_limit, dominated_limit, rho_s, GaussPerimeterSeries, GaussianMeasure};
use fracmass::{QuadratureSpec, Region};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = Region> {
    prop_oneof![
        (-3.0..3.0f64, 0.1..3.0f64).prop_map(|(a, w)| Region::interval(a, a + w)),
        (-2.0..2.0f64).prop_map(|o| Region::half_space(vec![1.0], o)),
        (-2.0..2.0f64).prop_map(|o| Region::half_space(vec![-1.0], o)),
    ]
}

fn gamma(r: &Region) -> f64 {
    GaussianMeasure::new(1).unwrap().measure(r).unwrap().value
}

fn minus(a: &Region, b: &Region) -> Region {
    Region::Intersection(vec![a.clone(), b.clone().complement()])
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn closed_form_identity_on_tuples(w in prop::array::uniform4(0.0..1.0f64)) {
        let t: f64 = w.iter().sum();
        prop_assume!(t > 0.0);
        let [a, b, c, d] = w.map(|x| x / t);
        let lhs = (a + b) * (c + d) - b * d;
        let rhs = (a + b) * c + a * d;
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn closed_form_matches_complement_product(e in interval(), om in interval()) {
        let ec = e.clone().complement();
        let expected = 2.0 * (gamma(&e) * gamma(&ec) - gamma(&minus(&e, &om)) * gamma(&minus(&ec, &om)));
        let got = closed_form_limit(&e, &om, 1).unwrap().value;
        prop_assert!((got - expected).abs() <= 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn kernel_times_s_tends_to_two(x in -3.0..3.0f64, dy in 0.05..3.0f64) {
        let (xs, ys) = (vec![x], vec![x + dy]);
        let r = sweep(|s| Ok(rho_s(&xs, &ys, s)?.scale(s)), &geometric_grid(1e-3, 1e-5, 5)).unwrap();
        prop_assert!((r.limit - 2.0).abs() < 1e-3, "{}", r.limit);
    }
}

proptest! {
    #![proptest_config(config(3))]

    #[test]
    fn planar_limit_matches_dominated_oracle(e in prop_oneof![half_plane(), sector()], r in 0.5..1.5f64, seed in any::<u64>()) {
        let om = Region::ball(vec![0.0, 0.0], r);
        let spec = QuadratureSpec::default().with_budget(400_000).with_seed(seed);
        let series = GaussPerimeterSeries::new(&e, &om, 2, &spec).unwrap();
        let lim = series.limit();
        let oracle = dominated_limit(&e, &om, 2, &spec.clone().with_seed(seed ^ 0x55)).unwrap();
        let tol = 0.01 * oracle.value + 3.0 * (lim.error + oracle.error);
        prop_assert!((lim.value - oracle.value).abs() <= tol, "{:?} vs {:?}", lim, oracle);
    }
}
