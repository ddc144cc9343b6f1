mod common;

use common::config;

use fracmass::quad::{mc_double_integral, UniformBoxPairs};
use fracmass::seminorm::gagliardo_qomega;
use fracmass::{QuadratureSpec, Region, ScalarField};
use proptest::prelude::*;

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn fixed_seed_is_bit_identical(seed in any::<u64>()) {
        let spec = QuadratureSpec::default().with_budget(20_000).with_seed(seed);
        let sampler = UniformBoxPairs { d: 2, lo: -1.0, hi: 1.0 };
        let g = |x: &[f64], y: &[f64]| (x[0] - y[1]).abs().sqrt() + x[1] * y[0];
        let a = mc_double_integral(g, &sampler, &spec).unwrap();
        let b = mc_double_integral(g, &sampler, &spec).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert_eq!(a.error.to_bits(), b.error.to_bits());

        let f = ScalarField::indicator(Region::half_space(vec![1.0, 0.0], 0.0));
        let omega = Region::unit_ball(2);
        let a = gagliardo_qomega(&f, &omega, 2, 0.3, 1, 20.0, &spec).unwrap();
        let b = gagliardo_qomega(&f, &omega, 2, 0.3, 1, 20.0, &spec).unwrap();
        prop_assert_eq!(a.total.value.to_bits(), b.total.value.to_bits());
    }
}

/// `∬_{[0,1]²} Σ c_ij x^i y^j` for random coefficients lands within three
/// reported errors for at least 95% of seeds.
#[test]
fn reported_error_covers_polynomials() {
    use rand::{Rng, SeedableRng};
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let trials = 60;
    let mut hits = 0;
    for t in 0..trials {
        let c: Vec<[f64; 3]> = (0..3).map(|_| [g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)]).collect();
        let exact: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| c[i][j] / ((i + 1) * (j + 1)) as f64).sum();
        let spec = QuadratureSpec::default().with_budget(4_000).with_seed(1000 + t);
        let est = mc_double_integral(
            |x, y| (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| c[i][j] * x[0].powi(i as i32) * y[0].powi(j as i32)).sum(),
            &UniformBoxPairs { d: 1, lo: 0.0, hi: 1.0 },
            &spec,
        )
        .unwrap();
        if (est.value - exact).abs() <= 3.0 * est.error {
            hits += 1;
        }
    }
    assert!(hits as f64 >= 0.95 * trials as f64, "{hits}/{trials}");
}
