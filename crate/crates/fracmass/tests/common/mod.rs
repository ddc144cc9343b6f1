#![allow(dead_code)]

use fracmass::{AngularFunction, AngularSet, RadialProfile, Region, ScalarField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, half_width: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-half_width..half_width)).collect()
}

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

pub fn ball2() -> impl Strategy<Value = Region> {
    (coord(), coord(), 0.1..2.0f64).prop_map(|(x, y, r)| Region::ball(vec![x, y], r))
}

pub fn box2() -> impl Strategy<Value = Region> {
    (coord(), coord(), 0.1..2.0f64, 0.1..2.0f64)
        .prop_map(|(x, y, w, h)| Region::Cuboid { lo: vec![x, y], hi: vec![x + w, y + h] })
}

pub fn half_plane() -> impl Strategy<Value = Region> {
    (0.0..std::f64::consts::TAU, -1.0..1.0f64).prop_map(|(a, o)| Region::half_space(vec![a.cos(), a.sin()], o))
}

pub fn sector() -> impl Strategy<Value = Region> {
    (0.0..std::f64::consts::TAU, 0.1..6.0f64).prop_map(|(a, w)| Region::sector2(a, w))
}

pub fn primitive2() -> impl Strategy<Value = Region> {
    prop_oneof![ball2(), box2(), half_plane(), sector()]
}

/// Planar regions up to two levels of composition.
pub fn region2() -> impl Strategy<Value = Region> {
    primitive2().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|r| Region::Complement(Box::new(r))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Region::Union),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Region::Intersection),
            (inner, coord(), coord()).prop_map(|(r, x, y)| r.shifted(vec![x, y])),
        ]
    })
}

/// Planar fields built from every constructor.
pub fn field2() -> impl Strategy<Value = ScalarField> {
    let leaf = prop_oneof![
        (-3.0..3.0f64).prop_map(ScalarField::Constant),
        primitive2().prop_map(ScalarField::Indicator),
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| ScalarField::affine(&[a, b], c)),
        (0.2..2.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(s, a, b)| ScalarField::RadialAngular {
            profile: RadialProfile::Saturating { scale: s },
            angular: AngularFunction::Linear(vec![a, b]),
        }),
        (0.2..2.0f64, 0.0..6.0f64).prop_map(|(r, a)| ScalarField::RadialAngular {
            profile: RadialProfile::Bump { radius: r },
            angular: AngularFunction::Indicator(AngularSet::Arcs(vec![[a, a + 1.5]])),
        }),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(ScalarField::Sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(ScalarField::Product),
            (inner.clone(), -2.0..2.0f64).prop_map(|(f, c)| f.scaled(c)),
            (inner.clone(), coord(), coord()).prop_map(|(f, x, y)| f.shifted(vec![x, y])),
            inner.clone().prop_map(|f| f.pos_part()),
            (inner, 1..4u32).prop_map(|(f, k)| f.power(k)),
        ]
    })
}

/// Fields whose tail is an angular limit with an analytic mass.
pub fn angular_field2() -> impl Strategy<Value = ScalarField> {
    prop_oneof![
        sector().prop_map(ScalarField::Indicator),
        half_plane().prop_map(ScalarField::Indicator),
        (-2.0..2.0f64).prop_map(ScalarField::Constant),
        (0.2..2.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(s, a, b)| ScalarField::RadialAngular {
            profile: RadialProfile::Saturating { scale: s },
            angular: AngularFunction::Linear(vec![a, b]),
        }),
        (sector(), -2.0..2.0f64)
            .prop_map(|(r, c)| ScalarField::Sum(vec![ScalarField::Indicator(r), ScalarField::Constant(c)])),
    ]
}

/// Fixed-seed configuration so Monte Carlo properties are reproducible.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_f00d),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
