mod common;

use common::*;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn positive_minus_negative_part(f in field2(), seed in any::<u64>()) {
        let (pos, neg) = (f.pos_part(), f.neg_part());
        let mut g = rng(seed);
        for _ in 0..500 {
            let x = random_point(&mut g, 2, 5.0);
            let v = f.value(&x);
            prop_assert!(close(pos.value(&x) - neg.value(&x), v));
            prop_assert!(pos.value(&x) >= 0.0 && neg.value(&x) >= 0.0);
        }
    }

    #[test]
    fn square_is_self_product(f in field2(), seed in any::<u64>()) {
        let sq = f.power(2);
        let mut g = rng(seed);
        for _ in 0..500 {
            let x = random_point(&mut g, 2, 5.0);
            let v = f.value(&x);
            prop_assert!(close(sq.value(&x), v * v));
        }
    }

    #[test]
    fn shift_keeps_the_limit(f in field2(), dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
        let t = f.tail_model();
        let shifted = f.clone().shifted(vec![dx, dy]).tail_model();
        prop_assert!(shifted.same_limit(&t), "{:?} vs {:?}", t, shifted);
    }

    #[test]
    fn far_values_follow_the_limit(f in angular_field2(), th in 0.0..std::f64::consts::TAU) {
        let g = f.tail_model().limit().unwrap();
        let u = [th.cos(), th.sin()];
        let far = f.value(&[1e9 * u[0], 1e9 * u[1]]);
        prop_assert!((far - g.eval(&u)).abs() < 1e-6, "{far} vs {}", g.eval(&u));
    }
}
