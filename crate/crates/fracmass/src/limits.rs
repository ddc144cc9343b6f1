//! Closed forms for the `s → 0` limits of localized seminorms.
//!
//! With `α = α_2`, the limit of `(s/2)[u]²` over pairs touching `Ω` is
//! `α(1)∫_Ω u² − 2α(u)∫_Ω u + α(u²)|Ω|`, which equals the interaction
//! energy `½∫_Ω∫_{S^{d-1}} |u(x) − u_∞(θ)|²`. For even `p` the analogous
//! alternating binomial sum holds; for odd `p` it does not.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::fields::{ScalarField, TailModel};
use crate::geometry::{integrate_over, sphere_measure, Region};
use crate::mass::alpha_analytic;
use crate::quad::QuadratureSpec;
use crate::sphere::{merge_equal_values, SphereRule};

/// Relative tolerance of the deterministic cubatures behind every limit.
pub const CUBATURE_TOL: f64 = 1e-11;

/// `∫_Ω g` where `g` is built from `fields`, whose ray breakpoints are
/// used to split the cubature.
pub fn integrate_fields<G>(omega: &Region, d: usize, fields: &[&ScalarField], g: G) -> Result<f64>
where
    G: Fn(&[f64]) -> f64,
{
    let est = integrate_over(
        omega,
        d,
        g,
        |c, u, a, b, out| {
            for f in fields {
                f.ray_breaks(c, u, a, b, out);
            }
        },
        |c, out| {
            for f in fields {
                f.apex_angles(c, out);
            }
        },
        CUBATURE_TOL,
    )?;
    Ok(est.value)
}

/// `|E ∩ Ω|` by deterministic cubature.
pub fn measure_in(e: &Region, omega: &Region, d: usize) -> Result<f64> {
    let f = ScalarField::Indicator(e.clone());
    integrate_fields(omega, d, &[&f], |x| f.value(x))
}

fn region_volume(omega: &Region, d: usize) -> Result<f64> {
    let v = omega.volume_with(d, &QuadratureSpec::default())?;
    if v.error == 0.0 {
        Ok(v.value)
    } else {
        integrate_fields(omega, d, &[], |_| 1.0)
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{k=0}^{p} C(p,k)(−1)^k α_p(f^k) ∫_Ω f^{p−k}` for any `p ≥ 1`, with
/// `α_p` from the analytic route.
pub fn binomial_sum(f: &ScalarField, omega: &Region, p: u32, d: usize) -> Result<f64> {
    check_dim(d)?;
    f.validate(d)?;
    omega.validate(d)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let vol = region_volume(omega, d)?;
    let mut total = 0.0;
    for k in 0..=p {
        let alpha = alpha_analytic(&f.power(k), p, d)?.value;
        if alpha == 0.0 {
            continue;
        }
        let m = p - k;
        let integral = if m == 0 { vol } else { integrate_fields(omega, d, &[f], |x| f.value(x).powi(m as i32))? };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += binom(p, k) * sign * alpha * integral;
    }
    Ok(total)
}

/// `α(1)∫_Ω f² − 2α(f)∫_Ω f + α(f²)|Ω|` with `α = α_2`.
pub fn f0_main(f: &ScalarField, omega: &Region, d: usize) -> Result<f64> {
    binomial_sum(f, omega, 2, d)
}

/// [`f0_main`] with caller-supplied masses `α_2(f)`, `α_2(f²)`, for fields
/// whose tail is only known numerically.
pub fn f0_main_with(f: &ScalarField, omega: &Region, d: usize, alpha_f: f64, alpha_f2: f64) -> Result<f64> {
    check_dim(d)?;
    f.validate(d)?;
    let vol = region_volume(omega, d)?;
    let i1 = integrate_fields(omega, d, &[f], |x| f.value(x))?;
    let i2 = integrate_fields(omega, d, &[f], |x| f.value(x).powi(2))?;
    Ok(sphere_measure(d).value / 2.0 * i2 - 2.0 * alpha_f * i1 + alpha_f2 * vol)
}

/// The even-`p` binomial formula; odd `p` is rejected.
pub fn f0_even_p(f: &ScalarField, omega: &Region, p: u32, d: usize) -> Result<f64> {
    if p % 2 == 1 {
        return Err(Error::OddExponent(p));
    }
    binomial_sum(f, omega, p, d)
}

/// `½ ∫_Ω ∫_{S^{d-1}} |f(x) − u_∞(θ)|²` by tensor quadrature.
/// `angular_resolution` sets the panel count of the sphere rule.
pub fn interaction_energy(f: &ScalarField, omega: &Region, d: usize, angular_resolution: usize) -> Result<f64> {
    check_dim(d)?;
    f.validate(d)?;
    let limit = match f.tail_model() {
        t @ (TailModel::CompactSupport { .. } | TailModel::AngularLimit { .. }) => t.limit().unwrap(),
        _ => return Err(Error::UnknownTail("interaction energy needs an angular limit".into())),
    };
    let mut breaks = Vec::new();
    limit.sphere_breaks(d, &mut breaks);
    let rule = SphereRule::new(d, angular_resolution, &breaks);
    let nodes = merge_equal_values(rule.nodes.iter().zip(&rule.weights).map(|(n, w)| (limit.eval(&n[..d]), *w)).collect(), 16);
    let e = integrate_fields(omega, d, &[f], |x| {
        let v = f.value(x);
        nodes.iter().map(|(g, w)| w * (v - g).powi(2)).sum::<f64>()
    })?;
    Ok(0.5 * e)
}

/// `½((dω_d − α_1(E))|E∩Ω| + α_1(E)|Ω∖E|)`. When `|E∩Ω| = |Ω∖E|` the
/// value `½ dω_d |E∩Ω|` is returned even if `α_1(E)` does not exist.
pub fn perimeter_limit(e: &Region, omega: &Region, d: usize) -> Result<f64> {
    check_dim(d)?;
    e.validate(d)?;
    omega.validate(d)?;
    let inside = measure_in(e, omega, d)?;
    let outside = region_volume(omega, d)? - inside;
    let total = sphere_measure(d).value;
    if half_measure(inside, outside) {
        return Ok(0.5 * total * inside);
    }
    let a1 = alpha_analytic(&ScalarField::Indicator(e.clone()), 1, d)
        .map_err(|_| Error::UnknownTail("α_1(E) does not exist and |E∩Ω| ≠ |Ω∖E|".into()))?
        .value;
    Ok(0.5 * ((total - a1) * inside + a1 * outside))
}

fn half_measure(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (a + b).max(1e-300)
}

/// `α_2` of the derived field `y ↦ ∫_Ω |f(x) − f(y)|² dx`.
///
/// For indicators the derived field is `|E∩Ω|·χ_{E^c} + |Ω∖E|·χ_E`, which
/// is constant under the half-measure condition; otherwise it expands to
/// the binomial form.
pub fn critical_alpha(f: &ScalarField, omega: &Region, d: usize, _spec: &QuadratureSpec) -> Result<f64> {
    check_dim(d)?;
    f.validate(d)?;
    omega.validate(d)?;
    let half_total = sphere_measure(d).value / 2.0;
    match f {
        ScalarField::Constant(_) => Ok(0.0),
        ScalarField::Indicator(e) => {
            let a = measure_in(e, omega, d)?;
            let b = region_volume(omega, d)? - a;
            if half_measure(a, b) {
                return Ok(a * half_total);
            }
            let alpha_e = alpha_analytic(f, 2, d)
                .map_err(|_| Error::UnknownTail("α(E) unavailable for the derived field".into()))?
                .value;
            Ok(a * (half_total - alpha_e) + b * alpha_e)
        }
        _ => f0_main(f, omega, d),
    }
}

/// Every closed-form limit available for one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub f0_binomial: Option<f64>,
    pub interaction_energy: Option<f64>,
    pub perimeter_limit: Option<f64>,
    pub critical_alpha: Option<f64>,
    pub consistency_deltas: Vec<(String, f64)>,
}

pub fn limit_report(f: &ScalarField, omega: &Region, d: usize) -> Result<LimitReport> {
    f.validate(d)?;
    omega.validate(d)?;
    let f0 = f0_main(f, omega, d).ok();
    let ie = interaction_energy(f, omega, d, 64).ok();
    let per = match f {
        ScalarField::Indicator(e) => perimeter_limit(e, omega, d).ok(),
        _ => None,
    };
    let crit = critical_alpha(f, omega, d, &QuadratureSpec::default()).ok();
    let mut deltas = Vec::new();
    if let (Some(a), Some(b)) = (f0, ie) {
        deltas.push(("f0_binomial-interaction_energy".to_string(), (a - b).abs()));
    }
    if let (Some(a), Some(b)) = (f0, per) {
        deltas.push(("f0_binomial-perimeter_limit".to_string(), (a - b).abs()));
    }
    if let (Some(a), Some(b)) = (f0, crit) {
        deltas.push(("f0_binomial-critical_alpha".to_string(), (a - b).abs()));
    }
    if f0.is_none() && crit.is_none() {
        return Err(Error::UnknownTail("no limit formula applies to this field".into()));
    }
    Ok(LimitReport { f0_binomial: f0, interaction_energy: ie, perimeter_limit: per, critical_alpha: crit, consistency_deltas: deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn example_v() -> ScalarField {
        ScalarField::Sum(vec![
            ScalarField::Product(vec![ScalarField::affine(&[1.0], 0.0), ScalarField::Indicator(Region::interval(-1.0, 1.0))]),
            ScalarField::Constant(1.0),
        ])
    }

    #[test]
    fn example_field_value() {
        let omega = Region::interval(-1.0, 1.0);
        let v = f0_main(&example_v(), &omega, 1).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12, "{v}");
        let ie = interaction_energy(&example_v(), &omega, 1, 4).unwrap();
        assert!((ie - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn compact_support_is_classical() {
        let omega = Region::unit_ball(2);
        let bump = ScalarField::bump(2);
        let l2 = integrate_fields(&omega, 2, &[&bump], |x| bump.value(x).powi(2)).unwrap();
        // ∫_{B_1} (1−r²)^4 = π/5
        assert!((l2 - PI / 5.0).abs() < 1e-10);
        let f0 = f0_main(&bump, &omega, 2).unwrap();
        assert!((f0 - PI * l2).abs() < 1e-10);
    }

    #[test]
    fn constants_vanish() {
        let omega = Region::unit_ball(2);
        let c = ScalarField::Constant(2.5);
        assert!(f0_main(&c, &omega, 2).unwrap().abs() < 1e-10);
        assert!(f0_even_p(&c, &omega, 4, 2).unwrap().abs() < 1e-9);
        assert!(interaction_energy(&c, &omega, 2, 8).unwrap().abs() < 1e-12);
        assert_eq!(critical_alpha(&c, &omega, 2, &QuadratureSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn odd_p_rejected() {
        let omega = Region::interval(-1.0, 1.0);
        assert_eq!(f0_even_p(&example_v(), &omega, 3, 1), Err(Error::OddExponent(3)));
        // the alternating sum itself for p = 3 vanishes on this example
        assert!(binomial_sum(&example_v(), &omega, 3, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn perimeter_limits() {
        let omega = Region::unit_ball(2);
        let sector = Region::sector2(0.0, PI / 2.0);
        let t = PI / 2.0;
        assert!((perimeter_limit(&sector, &omega, 2).unwrap() - 0.5 * t * (2.0 * PI - t)).abs() < 1e-9);
        let small = Region::ball(vec![0.0, 0.0], 0.5);
        assert!((perimeter_limit(&small, &omega, 2).unwrap() - PI * PI / 4.0).abs() < 1e-9);
        let half = Region::half_space(vec![1.0, 0.0], 0.0);
        assert!((perimeter_limit(&half, &omega, 2).unwrap() - PI * PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn critical_half_plane_and_shells() {
        let omega = Region::unit_ball(2);
        let half = Region::half_space(vec![1.0, 0.0], 0.0);
        let spec = QuadratureSpec::default();
        let a = critical_alpha(&ScalarField::Indicator(half.clone()), &omega, 2, &spec).unwrap();
        assert!((a - PI * PI / 2.0).abs() < 1e-9);
        let e = Region::Union(vec![
            Region::Intersection(vec![half, omega.clone()]),
            Region::RadialShells(Default::default()),
        ]);
        let b = critical_alpha(&ScalarField::Indicator(e), &omega, 2, &spec).unwrap();
        assert!((b - PI * PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn sector_outside_ball() {
        // Ω inside the sector: ½(2π−θ₀)|Ω|
        let th = 1.2;
        let e = Region::sector2(-th / 2.0, th);
        let omega = Region::ball(vec![3.0, 0.0], 1.0);
        let f = ScalarField::Indicator(e);
        let f0 = f0_main(&f, &omega, 2).unwrap();
        let ie = interaction_energy(&f, &omega, 2, 16).unwrap();
        assert!((f0 - 0.5 * (2.0 * PI - th) * PI).abs() < 1e-8);
        assert!((ie - f0).abs() < 1e-8);
    }
}
