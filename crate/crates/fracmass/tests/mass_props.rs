mod common;

use common::*;
use fracmass::asymptotics::default_grid;
use fracmass::mass::{alpha_analytic, alpha_numeric, alpha_translated};
use fracmass::{sphere_measure, QuadratureSpec};
use proptest::prelude::*;

/// Midpoint rule on the circle.
fn circle_integral(g: impl Fn(&[f64]) -> f64) -> f64 {
    let n = 1_000_000;
    let h = std::f64::consts::TAU / n as f64;
    (0..n).map(|i| {
        let t = (i as f64 + 0.5) * h;
        g(&[t.cos(), t.sin()])
    }).sum::<f64>() * h
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn mass_scales_inversely_with_p(f in angular_field2(), p in 1..6u32) {
        let a1 = alpha_analytic(&f, 1, 2).unwrap().value;
        let ap = alpha_analytic(&f, p, 2).unwrap().value;
        prop_assert!((ap * p as f64 - a1).abs() <= 1e-12 * (1.0 + a1.abs()));
    }

    #[test]
    fn mass_of_a_power_is_the_power_of_the_limit(f in angular_field2(), k in 1..4u32) {
        let g = f.tail_model().limit().unwrap();
        let expected = circle_integral(|u| g.eval(u).powi(k as i32));
        let got = alpha_analytic(&f.power(k), 1, 2).unwrap().value;
        prop_assert!((got - expected).abs() < 1e-4 * (1.0 + expected.abs()), "{got} vs {expected}");
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn translation_moves_the_tail_integral_within_bound(
        f in angular_field2(),
        len in 0.1..2.0f64,
        th in 0.0..std::f64::consts::TAU,
        radius in prop_oneof![Just(10.0), Just(100.0)],
    ) {
        let s = 1e-3;
        let spec = QuadratureSpec::default();
        let x = [len * th.cos(), len * th.sin()];
        let sup = f.power(2).value(&[0.0, 0.0]).sqrt().max(4.0);
        let a0 = alpha_translated(&f, 1, 2, &[0.0, 0.0], radius, s, &spec).unwrap();
        let ax = alpha_translated(&f, 1, 2, &x, radius, s, &spec).unwrap();
        let gap = radius - len;
        let bound = 2.0 * sup * sphere_measure(2).value * s * (2.0 + s) * len * gap.powf(-1.0 - s) * (radius / gap);
        prop_assert!((ax.value - a0.value).abs() <= bound + a0.error + ax.error);
    }

    #[test]
    fn numeric_mass_ignores_the_cutoff(f in angular_field2()) {
        let spec = QuadratureSpec::default();
        let near = alpha_numeric(&f, 1, 2, &default_grid(), 1.0, &spec).unwrap();
        let far = alpha_numeric(&f, 1, 2, &default_grid(), 10.0, &spec).unwrap();
        let exact = alpha_analytic(&f, 1, 2).unwrap().value;
        let tol = 4.0 * (near.limit_error + far.limit_error) + 1e-6;
        prop_assert!((near.limit - far.limit).abs() <= tol, "{} vs {}", near.limit, far.limit);
        prop_assert!((near.limit - exact).abs() <= 4.0 * near.limit_error + 1e-6, "{} vs {exact}", near.limit);
    }
}
