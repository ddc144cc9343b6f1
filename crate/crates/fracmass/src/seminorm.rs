//! The localized Gagliardo seminorm over `Q_Ω = (ℝ^d×ℝ^d) ∖ (Ω^c×Ω^c)`,
//! split as `Ω×Ω + 2·Ω×(B_R∖Ω) + 2·Ω×B_R^c`.
//!
//! The first two pieces are sampled with a power-law radial law in the
//! separation `|x−y|`. The exterior beyond `B_R` is handled per case:
//! exact ray quadrature in one dimension, a radial closed form against the
//! angular limit in higher dimensions, and a heavy-tailed sampler when the
//! field has no usable tail description.

use std::cell::{Cell, RefCell};

use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, check_s, Error, Result};
use crate::fields::{ScalarField, TailModel};
use crate::geometry::{integrate_over, norm, sphere_measure, uniform_in_ball, unit_ball_volume, Region};
use crate::mass::RayEngine;
use crate::quad::{power_integral, random_direction, run_batches, EstimateWithError, PowerLawRadial, QuadratureSpec};
use crate::sphere::{merge_equal_values, SphereRule};

/// How the part of the exterior beyond `B_R` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Zero,
    RayQuadrature,
    SemiAnalytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormBreakdown {
    pub interior_interior: EstimateWithError,
    pub interior_exterior_near: EstimateWithError,
    pub interior_exterior_tail: EstimateWithError,
    /// `interior_interior + 2·(near + tail)`.
    pub total: EstimateWithError,
    pub s: f64,
    pub p: u32,
    pub radius: f64,
    pub tail_method: TailMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormOptions {
    /// Radius of the ball splitting near and far exterior; see
    /// [`default_radius`] when absent.
    pub radius: Option<f64>,
    /// Uses `|f(y)−f(x)|` in place of `|f(x)−f(y)|` in the sampled terms.
    pub swap_roles: bool,
    /// Panel count of the sphere rule used for the angular limit.
    pub angular_resolution: usize,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        Self { radius: None, swap_roles: false, angular_resolution: 32 }
    }
}

/// Relative tolerance of the deterministic cubatures inside this module.
const CUBATURE_REL: f64 = 1e-8;

/// `max(20·ρ_Ω, 2·(settle + offset) + ρ_Ω)` with `ρ_Ω` the bounding radius
/// of `Ω` about the origin.
pub fn default_radius(f: &ScalarField, omega: &Region) -> Result<f64> {
    let rho = omega.bounding_radius().ok_or(Error::Unbounded)?;
    let tail = f.tail_model();
    let settle = match tail {
        TailModel::Unknown => 0.0,
        ref t => t.settle_radius() + t.offset(),
    };
    Ok((20.0 * rho).max(2.0 * settle + rho).max(1e-300))
}

/// `[f]^p_{W^{s,p}(Q_Ω)}` with its three components.
pub fn gagliardo_qomega(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    s: f64,
    p: u32,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<SeminormBreakdown> {
    let opts = SeminormOptions { radius: Some(radius), ..Default::default() };
    gagliardo_with(f, omega, d, s, p, &opts, spec)
}

pub fn gagliardo_with(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    s: f64,
    p: u32,
    opts: &SeminormOptions,
    spec: &QuadratureSpec,
) -> Result<SeminormBreakdown> {
    check_s(s)?;
    check_dim(d)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    f.validate(d)?;
    omega.validate(d)?;
    spec.validate()?;
    let (center, rho) = omega.bounding_ball().ok_or(Error::Unbounded)?;
    let radius = match opts.radius {
        Some(r) => r,
        None => default_radius(f, omega)?,
    };
    let rho_origin = omega.bounding_radius().ok_or(Error::Unbounded)?;
    if !(radius.is_finite() && radius >= 2.0 * rho_origin) {
        return Err(Error::InvalidParameter(format!(
            "R = {radius} must be at least twice the bounding radius {rho_origin} of Ω"
        )));
    }
    let e = s * p as f64;
    if e >= 1.0 && !f.is_continuous() {
        return Err(Error::InvalidParameter(format!(
            "s·p = {e} ≥ 1 makes the seminorm of a discontinuous field infinite"
        )));
    }
    let zero = |method| SeminormBreakdown {
        interior_interior: EstimateWithError::exact(0.0),
        interior_exterior_near: EstimateWithError::exact(0.0),
        interior_exterior_tail: EstimateWithError::exact(0.0),
        total: EstimateWithError::exact(0.0),
        s,
        p,
        radius,
        tail_method: method,
    };
    if matches!(omega, Region::Empty) || is_constant(f) {
        return Ok(zero(TailMethod::Zero));
    }

    let [ii, near] = sample_inner(f, omega, d, e, p, radius, &center, rho, opts.swap_roles, spec)?;
    let (tail, tail_method) = exterior_tail(f, omega, d, e, p, radius, opts, spec)?;
    let total = ii.add(near.add(tail).scale(2.0));
    Ok(SeminormBreakdown {
        interior_interior: ii,
        interior_exterior_near: near,
        interior_exterior_tail: tail,
        total,
        s,
        p,
        radius,
        tail_method,
    })
}

/// The `Ω×Ω` term alone. The field's behaviour outside `Ω` is irrelevant.
pub fn interior_interior(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    s: f64,
    p: u32,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_s(s)?;
    check_dim(d)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    f.validate(d)?;
    omega.validate(d)?;
    spec.validate()?;
    let (center, rho) = omega.bounding_ball().ok_or(Error::Unbounded)?;
    let e = s * p as f64;
    if e >= 1.0 && !f.is_continuous() {
        return Err(Error::InvalidParameter(format!(
            "s·p = {e} ≥ 1 makes the seminorm of a discontinuous field infinite"
        )));
    }
    if matches!(omega, Region::Empty) || is_constant(f) {
        return Ok(EstimateWithError::exact(0.0));
    }
    // every y ∈ Ω lies inside this radius
    let radius = (norm(&center) + rho) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let [ii, _] = sample_inner(f, omega, d, e, p, radius, &center, rho, false, spec)?;
    Ok(ii)
}

fn is_constant(f: &ScalarField) -> bool {
    match f {
        ScalarField::Constant(_) => true,
        ScalarField::Indicator(r) => matches!(r, Region::Empty | Region::Whole),
        ScalarField::Polynomial(t) => t.iter().all(|t| t.exponents.iter().all(|k| *k == 0)),
        _ => false,
    }
}

/// Samples `x` uniformly in the bounding ball of `Ω` and `y = x + rω` with
/// `r` drawn from a two-piece power law. Returns `[Ω×Ω, Ω×(B_R∖Ω)]`.
#[allow(clippy::too_many_arguments)]
fn sample_inner(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    e: f64,
    p: u32,
    radius: f64,
    center: &[f64],
    rho: f64,
    swap: bool,
    spec: &QuadratureSpec,
) -> Result<[EstimateWithError; 2]> {
    let r_max = radius + norm(center) + rho;
    let r0 = (0.1 * rho).min(0.5 * r_max);
    let beta = (0.5 + e).min(0.95);
    let near_mass = r0.powf(-e) / (1.0 - beta);
    let far_mass = power_integral(r0, r_max, -1.0 - e);
    let radial = PowerLawRadial::new(&[(0.0, r0, -beta, near_mass), (r0, r_max, -1.0 - e, far_mass)])?;
    let ball_volume = unit_ball_volume(d) * rho.powi(d as i32);
    let prefactor = ball_volume * sphere_measure(d).value;
    let r2 = radius * radius;
    run_batches::<2, _>(spec, |rng| {
        let mut x = [0.0; 3];
        let mut w = [0.0; 3];
        let mut y = [0.0; 3];
        uniform_in_ball(rng, center, rho, &mut x[..d]);
        if !omega.inside(&x[..d]) {
            return Some([0.0, 0.0]);
        }
        let r = radial.sample(rng);
        random_direction(rng, &mut w[..d]);
        for i in 0..d {
            y[i] = x[i] + r * w[i];
        }
        if y[..d].iter().map(|v| v * v).sum::<f64>() >= r2 {
            return Some([0.0, 0.0]);
        }
        let fx = f.value(&x[..d]);
        let fy = f.value(&y[..d]);
        let diff = if swap { fy - fx } else { fx - fy };
        let g = diff.abs().powi(p as i32);
        if g == 0.0 {
            return Some([0.0, 0.0]);
        }
        let weight = prefactor * g * r.powf(-1.0 - e) / radial.pdf(r);
        if omega.inside(&y[..d]) {
            Some([weight, 0.0])
        } else {
            Some([0.0, weight])
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn exterior_tail(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    e: f64,
    p: u32,
    radius: f64,
    opts: &SeminormOptions,
    spec: &QuadratureSpec,
) -> Result<(EstimateWithError, TailMethod)> {
    let tail = f.tail_model();
    if matches!(tail, TailModel::Unknown) && !f.is_piecewise_constant() {
        let probe = f.value_far(&unit(d), 60.0);
        if !probe.is_finite() {
            return Err(Error::DivergentTail("field grows without bound".into()));
        }
        return Err(Error::UnknownTail("field is neither piecewise constant nor declared at infinity".into()));
    }
    if d == 1 {
        return Ok((ray_tail(f, omega, e, p, radius)?, TailMethod::RayQuadrature));
    }
    match tail {
        TailModel::CompactSupport { .. } | TailModel::AngularLimit { .. } => {
            let settle = tail.settle_radius() + tail.offset();
            if radius <= settle {
                return Err(Error::InvalidParameter(format!(
                    "R = {radius} must exceed the radius {settle} beyond which the tail model holds"
                )));
            }
            Ok((semi_analytic_tail(f, omega, d, e, p, radius, &tail, opts)?, TailMethod::SemiAnalytic))
        }
        TailModel::PeriodicMean { .. } => Err(Error::InvalidField("periodic tails are one-dimensional".into())),
        TailModel::Unknown => Ok((sampled_tail(f, omega, d, e, p, radius, spec)?, TailMethod::MonteCarlo)),
    }
}

fn unit(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

/// `|f(x) − f|^p` as a field, for a fixed `f(x)`.
fn difference_power(f: &ScalarField, fx: f64, p: u32) -> ScalarField {
    let h = ScalarField::Sum(vec![ScalarField::Constant(fx), f.clone().scaled(-1.0)]);
    if p % 2 == 0 {
        h.power(p)
    } else {
        ScalarField::Sum(vec![h.clone().pos_part().power(p), h.neg_part().power(p)])
    }
}

/// One dimension: for each `x ∈ Ω` both rays beyond `±R` are integrated
/// exactly in `t = ln r`.
fn ray_tail(f: &ScalarField, omega: &Region, e: f64, p: u32, radius: f64) -> Result<EstimateWithError> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let ray_err = Cell::new(0.0f64);
    let inner = |x: &[f64]| -> f64 {
        let fx = f.value(x);
        let g = difference_power(f, fx, p);
        let engine = match RayEngine::new(&g, x, e) {
            Ok(en) => en,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                return 0.0;
            }
        };
        let mut total = 0.0;
        for u in [1.0, -1.0] {
            let (v, err) = engine.integral(&[u], (radius - u * x[0]).ln());
            total += v;
            ray_err.set(ray_err.get().max(err));
        }
        total
    };
    let est = integrate_over(omega, 1, inner, |c, u, a, b, out| f.ray_breaks(c, u, a, b, out), |c, out| f.apex_angles(c, out), CUBATURE_REL)?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let width = omega.bounding_ball().map(|(_, r)| 2.0 * r).unwrap_or(0.0);
    Ok(est.with_bound(2.0 * width * ray_err.get()))
}

/// Replaces `|x − y|` by `|y|` and `f(y)` by its angular limit, which gives
/// `T₀·R^{−sp}/(sp)` with `T₀ = ∫_Ω ∫_S |f(x) − g(θ)|^p`.
#[allow(clippy::too_many_arguments)]
fn semi_analytic_tail(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    e: f64,
    p: u32,
    radius: f64,
    tail: &TailModel,
    opts: &SeminormOptions,
) -> Result<EstimateWithError> {
    let g = tail.limit().expect("tail with an angular limit");
    let mut breaks = Vec::new();
    g.sphere_breaks(d, &mut breaks);
    let rule = SphereRule::new(d, opts.angular_resolution, &breaks);
    let nodes = merge_equal_values(rule.nodes.iter().zip(&rule.weights).map(|(n, w)| (g.eval(&n[..d]), *w)).collect(), 16);
    let sup_seen = Cell::new(0.0f64);
    let h = |x: &[f64]| -> f64 {
        let v = f.value(x);
        sup_seen.set(sup_seen.get().max(v.abs()));
        nodes.iter().map(|(gv, w)| w * (v - gv).abs().powi(p as i32)).sum()
    };
    let t0 = integrate_over(omega, d, h, |c, u, a, b, out| f.ray_breaks(c, u, a, b, out), |c, out| f.apex_angles(c, out), CUBATURE_REL)?;
    let radial = radius.powf(-e) / e;
    let value = t0.value * radial;

    let volume = omega.volume(d)?.value;
    let a_eff = omega.bounding_radius().ok_or(Error::Unbounded)? + tail.offset();
    let gap = radius - a_eff;
    let g_sup = (sup_seen.get() + g.sup_abs()).powi(p as i32);
    let edges = if g.as_constant().is_some() { 1.0 } else { 2.0 };
    let geometric = edges
        * volume
        * g_sup
        * sphere_measure(d).value
        * (d as f64 + e)
        * a_eff
        * gap.powf(-1.0 - e)
        / (1.0 + e)
        * (radius / gap).powi(d as i32 - 1);
    Ok(EstimateWithError::analytic(value, t0.error * radial + geometric))
}

/// Samples `ln|y−x|` as the exit log-distance from `B_R` plus an
/// exponential variable of rate `sp`, which matches the kernel exactly.
fn sampled_tail(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    e: f64,
    p: u32,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    let (center, rho) = omega.bounding_ball().ok_or(Error::Unbounded)?;
    let prefactor = unit_ball_volume(d) * rho.powi(d as i32) * sphere_measure(d).value / e;
    let [t] = run_batches::<1, _>(spec, |rng| {
        let mut x = [0.0; 3];
        let mut w = [0.0; 3];
        uniform_in_ball(rng, &center, rho, &mut x[..d]);
        if !omega.inside(&x[..d]) {
            return Some([0.0]);
        }
        random_direction(rng, &mut w[..d]);
        let b: f64 = (0..d).map(|i| x[i] * w[i]).sum();
        let xx: f64 = x[..d].iter().map(|v| v * v).sum();
        let exit = -b + (b * b - xx + radius * radius).sqrt();
        let u: f64 = rng.gen();
        let t = exit.ln() - (1.0 - u).ln() / e;
        let fy = f.value_on_ray(&x[..d], &w[..d], t);
        let g = (f.value(&x[..d]) - fy).abs().powi(p as i32);
        Some([prefactor * g * exit.powf(-e)])
    })?;
    Ok(t)
}

/// `Per_s(E; Ω) = ½ [χ_E]_{W^{s,1}(Q_Ω)}`.
pub fn fractional_perimeter(
    e: &Region,
    omega: &Region,
    d: usize,
    s: f64,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_s(s)?;
    if matches!(e, Region::Empty | Region::Whole) {
        e.validate(d)?;
        omega.validate(d)?;
        return Ok(EstimateWithError::exact(0.0));
    }
    let b = gagliardo_qomega(&ScalarField::Indicator(e.clone()), omega, d, s, 1, radius, spec)?;
    Ok(b.total.scale(0.5))
}

/// Both sides of the fractional Hardy inequality for the zero extension
/// of `f` from `Ω`: `(lhs, rhs)` with
/// `lhs = dω(1−δ)²·2^{−2s−1}·∫_Ω |f|²|x|^{−2s}` and `rhs = (s/2)·[f̃]²`.
pub fn hardy_pair(
    f: &ScalarField,
    omega: &Region,
    s: f64,
    delta: f64,
    d: usize,
    spec: &QuadratureSpec,
) -> Result<(EstimateWithError, EstimateWithError)> {
    check_s(s)?;
    check_dim(d)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("δ must lie in (0,1)".into()));
    }
    if s >= delta * delta / 8.0 {
        return Err(Error::InvalidParameter(format!("s = {s} must be below δ²/8 = {}", delta * delta / 8.0)));
    }
    f.validate(d)?;
    omega.validate(d)?;
    let extended = ScalarField::Product(vec![f.clone(), ScalarField::Indicator(omega.clone())]);
    let weight = sphere_measure(d).value * (1.0 - delta).powi(2) * 2f64.powf(-2.0 * s - 1.0);
    let lhs = integrate_over(
        omega,
        d,
        |x| {
            let v = f.value(x);
            if v == 0.0 {
                0.0
            } else {
                v * v * norm(x).powf(-2.0 * s)
            }
        },
        |c, u, a, b, out| f.ray_breaks(c, u, a, b, out),
        |c, out| f.apex_angles(c, out),
        CUBATURE_REL,
    )?
    .scale(weight);
    let radius = default_radius(&extended, omega)?;
    let rhs = gagliardo_qomega(&extended, omega, d, s, 2, radius, spec)?.total.scale(0.5 * s);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: u64) -> QuadratureSpec {
        QuadratureSpec::default().with_budget(n)
    }

    #[test]
    fn constants_vanish() {
        let omega = Region::unit_ball(2);
        let b = gagliardo_qomega(&ScalarField::Constant(3.0), &omega, 2, 0.3, 2, 5.0, &spec(1000)).unwrap();
        assert_eq!(b.total, EstimateWithError::exact(0.0));
        let per = fractional_perimeter(&Region::Empty, &omega, 2, 0.3, 5.0, &spec(1000)).unwrap();
        assert_eq!(per.value, 0.0);
    }

    #[test]
    fn radius_and_order_checks() {
        let omega = Region::unit_ball(2);
        let f = ScalarField::indicator(Region::half_space(vec![1.0, 0.0], 0.0));
        assert!(gagliardo_qomega(&f, &omega, 2, 0.1, 2, 1.5, &spec(1000)).is_err());
        assert!(matches!(gagliardo_qomega(&f, &omega, 2, 0.6, 2, 5.0, &spec(1000)), Err(Error::InvalidParameter(_))));
        assert_eq!(gagliardo_qomega(&f, &omega, 2, 1.5, 2, 5.0, &spec(1000)).unwrap_err(), Error::SOutOfRange);
    }

    /// `χ_{(0,∞)}` on `(−1,1)` with `p = 1`: every term has a closed form.
    #[test]
    fn step_in_one_dimension() {
        let f = ScalarField::indicator(Region::half_space(vec![1.0], 0.0));
        let omega = Region::interval(-1.0, 1.0);
        let s: f64 = 0.3;
        let r = 4.0;
        let b = gagliardo_qomega(&f, &omega, 1, s, 1, r, &spec(400_000)).unwrap();
        // ∫_{-1}^0 ∫_0^1 (y−x)^{-1-s} dy dx, doubled for the ordered pairs
        let cross = |a: f64, b: f64| {
            // ∫_0^a ∫_0^b (x+y)^{-1-s} = ((a+b)^{1-s} − a^{1-s} − b^{1-s}) / (s(s−1))
            ((a + b).powf(1.0 - s) - a.powf(1.0 - s) - b.powf(1.0 - s)) / (s * (s - 1.0))
        };
        let ii = 2.0 * cross(1.0, 1.0);
        // x ∈ (−1,0) against y ∈ (1,R); x ∈ (0,1) against y ∈ (−R,−1)
        let near = 2.0 * (cross(1.0, r) - cross(1.0, 1.0));
        // and the tail beyond R on the opposite side
        let tail = 2.0 * ((1.0 + r).powf(1.0 - s) - r.powf(1.0 - s)) / ((1.0 - s) * s);
        assert!((b.interior_interior.value - ii).abs() < 4.0 * b.interior_interior.error + 1e-3, "{b:?} {ii}");
        assert!((b.interior_exterior_near.value - near).abs() < 4.0 * b.interior_exterior_near.error + 1e-3, "{b:?} {near}");
        assert!((b.interior_exterior_tail.value - tail).abs() < 1e-7, "{} {tail}", b.interior_exterior_tail.value);
    }

    #[test]
    fn semi_analytic_tail_of_half_plane() {
        let f = ScalarField::indicator(Region::half_space(vec![1.0, 0.0], 0.0));
        let omega = Region::unit_ball(2);
        let b = gagliardo_qomega(&f, &omega, 2, 0.01, 2, 40.0, &spec(20_000)).unwrap();
        assert_eq!(b.tail_method, TailMethod::SemiAnalytic);
        // T₀ = π·|Ω| = π², times R^{−2s}/(2s)
        let exact = PI * PI * 40f64.powf(-0.02) / 0.02;
        assert!((b.interior_exterior_tail.value - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn swap_matches_in_distribution() {
        let f = ScalarField::bump(2);
        let omega = Region::unit_ball(2);
        let a = gagliardo_with(&f, &omega, 2, 0.2, 2, &SeminormOptions::default(), &spec(50_000)).unwrap();
        let opts = SeminormOptions { swap_roles: true, ..Default::default() };
        let b = gagliardo_with(&f, &omega, 2, 0.2, 2, &opts, &spec(50_000)).unwrap();
        assert_eq!(a.total.value, b.total.value);
    }

    #[test]
    fn hardy_inequality_holds_for_ball_indicator() {
        let f = ScalarField::indicator(Region::ball(vec![0.0, 0.0], 0.5));
        let (l, r) = hardy_pair(&f, &Region::unit_ball(2), 0.01, 0.5, 2, &spec(100_000)).unwrap();
        assert!(r.value - l.value > l.error + r.error, "{l:?} {r:?}");
        assert!(hardy_pair(&f, &Region::unit_ball(2), 0.05, 0.5, 2, &spec(1000)).is_err());
    }
}
