//! Scalar fields `u: ℝ^d → ℝ` as constructor trees, with a tail model that
//! describes their behaviour as `|x| → ∞`.
//!
//! Tail models are propagated structurally through the tree and never
//! inferred from samples.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dot, norm, AngularSet, Region, FAR_LOG_RADIUS};
use crate::quad::{self, Tol};
use crate::sphere;

/// Largest total degree accepted in a polynomial.
pub const MAX_DEGREE: u32 = 4;

/// Profiles settle to within `e^{-SETTLE_LOG}` of their limit beyond
/// `SETTLE_LOG · scale`.
const SETTLE_LOG: f64 = 28.0;

/// A bounded function on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularFunction {
    Constant(f64),
    Indicator(AngularSet),
    /// `θ ↦ a·θ`.
    Linear(Vec<f64>),
    Sum(Vec<AngularFunction>),
    Product(Vec<AngularFunction>),
    Scale { factor: f64, of: Box<AngularFunction> },
    Power { of: Box<AngularFunction>, k: u32 },
    PosPart(Box<AngularFunction>),
    NegPart(Box<AngularFunction>),
}

impl AngularFunction {
    pub fn one_minus(g: AngularFunction) -> Self {
        match g {
            AngularFunction::Constant(c) => AngularFunction::Constant(1.0 - c),
            g => AngularFunction::Sum(vec![
                AngularFunction::Constant(1.0),
                AngularFunction::Scale { factor: -1.0, of: Box::new(g) },
            ]),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            AngularFunction::Constant(c) if c.is_finite() => Ok(()),
            AngularFunction::Constant(_) => Err(Error::InvalidField("non-finite angular constant".into())),
            AngularFunction::Indicator(a) => Region::Sector(a.clone()).validate(d),
            AngularFunction::Linear(a) if a.len() == d => Ok(()),
            AngularFunction::Linear(a) => Err(Error::DimensionMismatch { expected: d, got: a.len() }),
            AngularFunction::Sum(v) | AngularFunction::Product(v) => v.iter().try_for_each(|g| g.validate(d)),
            AngularFunction::Scale { of, .. }
            | AngularFunction::Power { of, .. }
            | AngularFunction::PosPart(of)
            | AngularFunction::NegPart(of) => of.validate(d),
        }
    }

    /// Value at a direction (unit vector).
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            AngularFunction::Constant(c) => *c,
            AngularFunction::Indicator(a) => {
                if a.contains_dir(u) {
                    1.0
                } else {
                    0.0
                }
            }
            AngularFunction::Linear(a) => dot(a, u),
            AngularFunction::Sum(v) => v.iter().map(|g| g.eval(u)).sum(),
            AngularFunction::Product(v) => v.iter().map(|g| g.eval(u)).product(),
            AngularFunction::Scale { factor, of } => factor * of.eval(u),
            AngularFunction::Power { of, k } => of.eval(u).powi(*k as i32),
            AngularFunction::PosPart(of) => of.eval(u).max(0.0),
            AngularFunction::NegPart(of) => (-of.eval(u)).max(0.0),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            AngularFunction::Constant(c) => Some(*c),
            AngularFunction::Sum(v) => v.iter().map(|g| g.as_constant()).sum(),
            AngularFunction::Product(v) => v.iter().map(|g| g.as_constant()).product(),
            AngularFunction::Scale { factor, of } => of.as_constant().map(|c| factor * c),
            AngularFunction::Power { of, k } => of.as_constant().map(|c| c.powi(*k as i32)),
            AngularFunction::PosPart(of) => of.as_constant().map(|c| c.max(0.0)),
            AngularFunction::NegPart(of) => of.as_constant().map(|c| (-c).max(0.0)),
            _ => None,
        }
    }

    /// Upper bound on `sup |g|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            AngularFunction::Constant(c) => c.abs(),
            AngularFunction::Indicator(_) => 1.0,
            AngularFunction::Linear(a) => norm(a),
            AngularFunction::Sum(v) => v.iter().map(|g| g.sup_abs()).sum(),
            AngularFunction::Product(v) => v.iter().map(|g| g.sup_abs()).product(),
            AngularFunction::Scale { factor, of } => factor.abs() * of.sup_abs(),
            AngularFunction::Power { of, k } => of.sup_abs().powi(*k as i32),
            AngularFunction::PosPart(of) | AngularFunction::NegPart(of) => of.sup_abs(),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        match self {
            AngularFunction::Constant(_) | AngularFunction::Indicator(_) => true,
            AngularFunction::Linear(_) => false,
            AngularFunction::Sum(v) | AngularFunction::Product(v) => v.iter().all(|g| g.is_piecewise_constant()),
            AngularFunction::Scale { of, .. }
            | AngularFunction::Power { of, .. }
            | AngularFunction::PosPart(of)
            | AngularFunction::NegPart(of) => of.is_piecewise_constant(),
        }
    }

    /// Sphere-parameter breakpoints: angles for `d = 2`, heights `z` for `d = 3`.
    pub fn sphere_breaks(&self, d: usize, out: &mut Vec<f64>) {
        match self {
            AngularFunction::Indicator(a) => match (d, a) {
                (2, _) => out.extend(a.angular_breaks()),
                (3, AngularSet::Caps(caps)) => {
                    for c in caps {
                        let n = norm(&c.axis);
                        if c.axis[0].abs() < 1e-15 * n && c.axis[1].abs() < 1e-15 * n {
                            out.push(c.axis[2].signum() * c.half_angle.cos());
                        }
                    }
                }
                (3, AngularSet::Hemisphere(n)) if n[0] == 0.0 && n[1] == 0.0 => out.push(0.0),
                _ => {}
            },
            AngularFunction::Linear(a) => match d {
                2 => {
                    let phi = a[1].atan2(a[0]);
                    out.push((phi + std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::TAU));
                    out.push((phi - std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::TAU));
                }
                3 if a[0] == 0.0 && a[1] == 0.0 => out.push(0.0),
                _ => {}
            },
            AngularFunction::Constant(_) => {}
            AngularFunction::Sum(v) | AngularFunction::Product(v) => v.iter().for_each(|g| g.sphere_breaks(d, out)),
            AngularFunction::Scale { of, .. }
            | AngularFunction::Power { of, .. }
            | AngularFunction::PosPart(of)
            | AngularFunction::NegPart(of) => of.sphere_breaks(d, out),
        }
    }

    /// Ray crossings (in `ln r`) of the cone boundaries where `g(y/|y|)`
    /// may jump or kink along `y = c + r u`.
    pub fn ray_breaks(&self, c: &[f64], u: &[f64], t_lo: f64, t_hi: f64, out: &mut Vec<f64>) {
        match self {
            AngularFunction::Indicator(a) => Region::Sector(a.clone()).ray_breaks(c, u, t_lo, t_hi, out),
            AngularFunction::Linear(a) => {
                Region::HalfSpace { normal: a.clone(), offset: 0.0 }.ray_breaks(c, u, t_lo, t_hi, out)
            }
            AngularFunction::Constant(_) => {}
            AngularFunction::Sum(v) | AngularFunction::Product(v) => {
                v.iter().for_each(|g| g.ray_breaks(c, u, t_lo, t_hi, out))
            }
            AngularFunction::Scale { of, .. }
            | AngularFunction::Power { of, .. }
            | AngularFunction::PosPart(of)
            | AngularFunction::NegPart(of) => of.ray_breaks(c, u, t_lo, t_hi, out),
        }
    }

    /// `∫_{S^{d-1}} g`, exact for piecewise constant combinations of a
    /// single angular set, adaptive quadrature otherwise.
    pub fn sphere_integral(&self, d: usize) -> quad::EstimateWithError {
        let total = crate::geometry::sphere_measure(d).value;
        match self {
            AngularFunction::Constant(c) => quad::EstimateWithError::exact(c * total),
            AngularFunction::Indicator(a) => quad::EstimateWithError::exact(a.measure(d)),
            AngularFunction::Linear(_) => quad::EstimateWithError::exact(0.0),
            AngularFunction::Scale { factor, of } => of.sphere_integral(d).scale(*factor),
            AngularFunction::Sum(v) => v
                .iter()
                .map(|g| g.sphere_integral(d))
                .fold(quad::EstimateWithError::exact(0.0), quad::EstimateWithError::add),
            AngularFunction::Power { of, k } if *k >= 1 && matches!(**of, AngularFunction::Indicator(_)) => {
                of.sphere_integral(d)
            }
            _ => {
                let mut b = Vec::new();
                self.sphere_breaks(d, &mut b);
                sphere::integrate(d, |u| self.eval(u), &b)
            }
        }
    }
}

/// A monomial `coef · Π x_i^{e_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

/// Radial factor of a [`ScalarField::RadialAngular`] field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    One,
    /// `1 − e^{−r/scale}`.
    Saturating { scale: f64 },
    /// `e^{−r/scale}`.
    Decaying { scale: f64 },
    /// `(1 − (r/radius)²)²` inside the ball, zero outside.
    Bump { radius: f64 },
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::One => 1.0,
            RadialProfile::Saturating { scale } => -(-r / scale).exp_m1(),
            RadialProfile::Decaying { scale } => (-r / scale).exp(),
            RadialProfile::Bump { radius } => {
                if r < radius {
                    (1.0 - (r / radius).powi(2)).powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn limit(&self) -> f64 {
        match self {
            RadialProfile::One | RadialProfile::Saturating { .. } => 1.0,
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::One => Ok(()),
            RadialProfile::Saturating { scale: v } | RadialProfile::Decaying { scale: v } | RadialProfile::Bump { radius: v } => {
                if v > 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidField("radial profile scale must be positive".into()))
                }
            }
        }
    }
}

/// How a field behaves as `|x| → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TailModel {
    /// The field vanishes outside `B(0, radius)`.
    CompactSupport { radius: f64 },
    /// `u(rθ) → limit(θ)` uniformly. The field equals its limit beyond
    /// `settle_radius` up to a translation of the asymptotic cone by at
    /// most `offset`.
    AngularLimit { limit: AngularFunction, settle_radius: f64, offset: f64 },
    /// `d = 1` only: periodic beyond `settle_radius` with the given mean.
    PeriodicMean { mean: f64, period: f64, settle_radius: f64 },
    Unknown,
}

impl TailModel {
    fn angular(limit: AngularFunction) -> Self {
        TailModel::AngularLimit { limit, settle_radius: 0.0, offset: 0.0 }
    }

    /// The same asymptotic object, ignoring radii and offsets.
    pub fn same_limit(&self, other: &TailModel) -> bool {
        match (self, other) {
            (TailModel::CompactSupport { .. }, TailModel::CompactSupport { .. }) => true,
            (TailModel::AngularLimit { limit: a, .. }, TailModel::AngularLimit { limit: b, .. }) => a == b,
            (TailModel::PeriodicMean { mean: a, period: p, .. }, TailModel::PeriodicMean { mean: b, period: q, .. }) => {
                a == b && p == q
            }
            (TailModel::Unknown, TailModel::Unknown) => true,
            _ => false,
        }
    }

    /// Angular limit, with compact support read as the zero limit.
    pub fn limit(&self) -> Option<AngularFunction> {
        match self {
            TailModel::CompactSupport { .. } => Some(AngularFunction::Constant(0.0)),
            TailModel::AngularLimit { limit, .. } => Some(limit.clone()),
            _ => None,
        }
    }

    /// Radius beyond which the field is known to equal its tail description.
    pub fn settle_radius(&self) -> f64 {
        match *self {
            TailModel::CompactSupport { radius } => radius,
            TailModel::AngularLimit { settle_radius, .. } | TailModel::PeriodicMean { settle_radius, .. } => settle_radius,
            TailModel::Unknown => f64::INFINITY,
        }
    }

    pub fn offset(&self) -> f64 {
        match *self {
            TailModel::AngularLimit { offset, .. } => offset,
            _ => 0.0,
        }
    }

    fn shifted(self, by: f64) -> Self {
        match self {
            TailModel::CompactSupport { radius } => TailModel::CompactSupport { radius: radius + by },
            TailModel::AngularLimit { limit, settle_radius, offset } => {
                TailModel::AngularLimit { limit, settle_radius: settle_radius + by, offset: offset + by }
            }
            TailModel::PeriodicMean { mean, period, settle_radius } => {
                TailModel::PeriodicMean { mean, period, settle_radius: settle_radius + by }
            }
            TailModel::Unknown => TailModel::Unknown,
        }
    }

    fn as_angular(&self) -> Option<(AngularFunction, f64, f64)> {
        match self {
            TailModel::CompactSupport { radius } => Some((AngularFunction::Constant(0.0), *radius, 0.0)),
            TailModel::AngularLimit { limit, settle_radius, offset } => Some((limit.clone(), *settle_radius, *offset)),
            _ => None,
        }
    }
}

/// Tail model of the indicator of a region.
pub fn region_tail(r: &Region) -> TailModel {
    match r {
        Region::Empty => TailModel::CompactSupport { radius: 0.0 },
        Region::Whole => TailModel::angular(AngularFunction::Constant(1.0)),
        Region::Ball { .. } | Region::Cuboid { .. } => {
            TailModel::CompactSupport { radius: r.bounding_radius().unwrap_or(0.0) }
        }
        Region::HalfSpace { normal, offset } => TailModel::AngularLimit {
            limit: AngularFunction::Indicator(AngularSet::Hemisphere(normal.clone())),
            settle_radius: 0.0,
            offset: offset.abs() / norm(normal),
        },
        Region::Sector(a) => TailModel::angular(AngularFunction::Indicator(a.clone())),
        Region::RadialShells(_) => TailModel::Unknown,
        Region::Shift { region, by } => region_tail(region).shifted(norm(by)),
        Region::Complement(inner) => match region_tail(inner) {
            TailModel::CompactSupport { radius } => {
                TailModel::AngularLimit { limit: AngularFunction::Constant(1.0), settle_radius: radius, offset: 0.0 }
            }
            TailModel::AngularLimit { limit, settle_radius, offset } => {
                TailModel::AngularLimit { limit: AngularFunction::one_minus(limit), settle_radius, offset }
            }
            _ => TailModel::Unknown,
        },
        Region::Intersection(rs) => {
            let tails: Vec<TailModel> = rs.iter().map(region_tail).collect();
            if let Some(radius) = tails
                .iter()
                .filter_map(|t| match t {
                    TailModel::CompactSupport { radius } => Some(*radius),
                    _ => None,
                })
                .reduce(f64::min)
            {
                return TailModel::CompactSupport { radius };
            }
            combine_angular(&tails, |gs| AngularFunction::Product(gs))
        }
        Region::Union(rs) => {
            let tails: Vec<TailModel> = rs.iter().map(region_tail).collect();
            if tails.iter().all(|t| matches!(t, TailModel::CompactSupport { .. })) {
                let radius = tails.iter().map(|t| t.settle_radius()).fold(0.0, f64::max);
                return TailModel::CompactSupport { radius };
            }
            combine_angular(&tails, |gs| {
                AngularFunction::one_minus(AngularFunction::Product(gs.into_iter().map(AngularFunction::one_minus).collect()))
            })
        }
    }
}

fn combine_angular(tails: &[TailModel], op: impl FnOnce(Vec<AngularFunction>) -> AngularFunction) -> TailModel {
    let mut gs = Vec::new();
    let (mut settle, mut off) = (0.0f64, 0.0f64);
    for t in tails {
        match t.as_angular() {
            Some((g, s, o)) => {
                gs.push(g);
                settle = settle.max(s);
                off = off.max(o);
            }
            None => return TailModel::Unknown,
        }
    }
    TailModel::AngularLimit { limit: op(gs), settle_radius: settle, offset: off }
}

/// A field `u: ℝ^d → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant(f64),
    Indicator(Region),
    Polynomial(Vec<Term>),
    /// `profile(|x|) · angular(x/|x|)`; the value at the origin uses the
    /// direction `e_1`.
    RadialAngular { profile: RadialProfile, angular: AngularFunction },
    /// `d = 1`: piecewise constant of period `period`; `steps` lists
    /// `[start, value]` pairs with starts increasing from 0.
    Periodic1D { steps: Vec<[f64; 2]>, period: f64 },
    /// `x ↦ field(x − by)`.
    Shift { field: Box<ScalarField>, by: Vec<f64> },
    Sum(Vec<ScalarField>),
    Product(Vec<ScalarField>),
    Scale { factor: f64, field: Box<ScalarField> },
    PosPart(Box<ScalarField>),
    NegPart(Box<ScalarField>),
    Power { field: Box<ScalarField>, k: u32 },
}

impl ScalarField {
    pub fn indicator(r: Region) -> Self {
        ScalarField::Indicator(r)
    }

    /// `Σ a_i x_i + b`.
    pub fn affine(a: &[f64], b: f64) -> Self {
        let d = a.len();
        let mut terms = vec![Term { coef: b, exponents: vec![0; d] }];
        for (i, &c) in a.iter().enumerate() {
            let mut e = vec![0; d];
            e[i] = 1;
            terms.push(Term { coef: c, exponents: e });
        }
        ScalarField::Polynomial(terms)
    }

    /// `(1 − |x|²)²` on the unit ball, zero outside.
    pub fn bump(d: usize) -> Self {
        let mut terms = vec![Term { coef: 1.0, exponents: vec![0; d] }];
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = 2;
            terms.push(Term { coef: -2.0, exponents: e.clone() });
            e[i] = 4;
            terms.push(Term { coef: 1.0, exponents: e });
            for j in i + 1..d {
                let mut e = vec![0; d];
                e[i] = 2;
                e[j] = 2;
                terms.push(Term { coef: 2.0, exponents: e });
            }
        }
        ScalarField::Product(vec![ScalarField::Polynomial(terms), ScalarField::Indicator(Region::unit_ball(d))])
    }

    pub fn shifted(self, by: Vec<f64>) -> Self {
        ScalarField::Shift { field: Box::new(self), by }
    }

    pub fn scaled(self, factor: f64) -> Self {
        ScalarField::Scale { factor, field: Box::new(self) }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        check_dim(d)?;
        self.validate_inner(d)
    }

    fn validate_inner(&self, d: usize) -> Result<()> {
        match self {
            ScalarField::Constant(c) if c.is_finite() => Ok(()),
            ScalarField::Constant(_) => Err(Error::InvalidField("non-finite constant".into())),
            ScalarField::Indicator(r) => r.validate(d),
            ScalarField::Polynomial(terms) => {
                for t in terms {
                    if t.exponents.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: t.exponents.len() });
                    }
                    if t.exponents.iter().sum::<u32>() > MAX_DEGREE {
                        return Err(Error::InvalidField(format!("polynomial degree exceeds {MAX_DEGREE}")));
                    }
                    if !t.coef.is_finite() {
                        return Err(Error::InvalidField("non-finite coefficient".into()));
                    }
                }
                Ok(())
            }
            ScalarField::RadialAngular { profile, angular } => {
                profile.validate()?;
                angular.validate(d)
            }
            ScalarField::Periodic1D { steps, period } => {
                if d != 1 {
                    return Err(Error::InvalidField("periodic fields are one-dimensional".into()));
                }
                if !(*period > 0.0) || steps.is_empty() || steps[0][0] != 0.0 {
                    return Err(Error::InvalidField("periodic field needs period > 0 and a step at 0".into()));
                }
                if steps.windows(2).any(|w| !(w[1][0] > w[0][0])) || steps.last().unwrap()[0] >= *period {
                    return Err(Error::InvalidField("step starts must increase within one period".into()));
                }
                Ok(())
            }
            ScalarField::Shift { field, by } => {
                if by.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: by.len() });
                }
                field.validate_inner(d)
            }
            ScalarField::Sum(v) | ScalarField::Product(v) => v.iter().try_for_each(|f| f.validate_inner(d)),
            ScalarField::Scale { field, .. } | ScalarField::Power { field, .. } => field.validate_inner(d),
            ScalarField::PosPart(f) | ScalarField::NegPart(f) => f.validate_inner(d),
        }
    }

    /// Pointwise value; assumes a validated field of matching dimension.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Indicator(r) => {
                if r.inside(x) {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarField::Polynomial(terms) => terms
                .iter()
                .map(|t| t.coef * x.iter().zip(&t.exponents).map(|(v, e)| v.powi(*e as i32)).product::<f64>())
                .sum(),
            ScalarField::RadialAngular { profile, angular } => {
                let r = norm(x);
                let p = profile.eval(r);
                if p == 0.0 {
                    return 0.0;
                }
                if r == 0.0 {
                    let mut e = [0.0; 3];
                    e[0] = 1.0;
                    return p * angular.eval(&e[..x.len()]);
                }
                let mut u = [0.0; 3];
                for i in 0..x.len() {
                    u[i] = x[i] / r;
                }
                p * angular.eval(&u[..x.len()])
            }
            ScalarField::Periodic1D { steps, period } => periodic_value(steps, *period, x[0]),
            ScalarField::Shift { field, by } => {
                let mut y = [0.0; 3];
                for i in 0..x.len() {
                    y[i] = x[i] - by[i];
                }
                field.value(&y[..x.len()])
            }
            ScalarField::Sum(v) => v.iter().map(|f| f.value(x)).sum(),
            ScalarField::Product(v) => {
                let mut acc = 1.0;
                for f in v {
                    acc *= f.value(x);
                    if acc == 0.0 {
                        break;
                    }
                }
                acc
            }
            ScalarField::Scale { factor, field } => factor * field.value(x),
            ScalarField::PosPart(f) => f.value(x).max(0.0),
            ScalarField::NegPart(f) => (-f.value(x)).max(0.0),
            ScalarField::Power { field, k } => field.value(x).powi(*k as i32),
        }
    }

    /// Checked pointwise evaluation.
    pub fn eval(&self, x: &[f64], d: usize) -> Result<f64> {
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        self.validate(d)?;
        Ok(self.value(x))
    }

    /// Value at `e^{log_r} · dir` for `log_r` beyond
    /// [`FAR_LOG_RADIUS`]. Unbounded and periodic pieces give NaN.
    pub fn value_far(&self, dir: &[f64], log_r: f64) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Indicator(r) => {
                if r.inside_far(dir, log_r) {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarField::Polynomial(terms) => {
                if terms.iter().all(|t| t.exponents.iter().all(|e| *e == 0)) {
                    terms.iter().map(|t| t.coef).sum()
                } else {
                    f64::NAN
                }
            }
            ScalarField::RadialAngular { profile, angular } => profile.limit() * angular.eval(dir),
            ScalarField::Periodic1D { .. } => f64::NAN,
            ScalarField::Shift { field, .. } => field.value_far(dir, log_r),
            ScalarField::Sum(v) => v.iter().map(|f| f.value_far(dir, log_r)).sum(),
            ScalarField::Product(v) => {
                // a vanishing factor wins over an unbounded one
                let vals: Vec<f64> = v.iter().map(|f| f.value_far(dir, log_r)).collect();
                if vals.contains(&0.0) {
                    0.0
                } else {
                    vals.iter().product()
                }
            }
            ScalarField::Scale { factor, field } => factor * field.value_far(dir, log_r),
            ScalarField::PosPart(f) => f.value_far(dir, log_r).max(0.0),
            ScalarField::NegPart(f) => (-f.value_far(dir, log_r)).max(0.0),
            ScalarField::Power { field, k } => field.value_far(dir, log_r).powi(*k as i32),
        }
    }

    /// Value at `c + e^t u`, switching to the far-field form for large `t`.
    pub fn value_on_ray(&self, c: &[f64], u: &[f64], t: f64) -> f64 {
        if t > FAR_LOG_RADIUS + norm(c).ln_1p() {
            self.value_far(u, t)
        } else {
            let r = t.exp();
            let mut y = [0.0; 3];
            for i in 0..c.len() {
                y[i] = c[i] + r * u[i];
            }
            self.value(&y[..c.len()])
        }
    }

    /// `f^k` with the tail model propagated; simplifies constants and
    /// indicators.
    pub fn power(&self, k: u32) -> ScalarField {
        match (self, k) {
            (_, 0) => ScalarField::Constant(1.0),
            (_, 1) => self.clone(),
            (ScalarField::Constant(c), _) => ScalarField::Constant(c.powi(k as i32)),
            (ScalarField::Indicator(_), _) => self.clone(),
            _ => ScalarField::Power { field: Box::new(self.clone()), k },
        }
    }

    pub fn pos_part(&self) -> ScalarField {
        match self {
            ScalarField::Constant(c) => ScalarField::Constant(c.max(0.0)),
            ScalarField::Indicator(_) => self.clone(),
            _ => ScalarField::PosPart(Box::new(self.clone())),
        }
    }

    pub fn neg_part(&self) -> ScalarField {
        match self {
            ScalarField::Constant(c) => ScalarField::Constant((-c).max(0.0)),
            ScalarField::Indicator(_) => ScalarField::Constant(0.0),
            _ => ScalarField::NegPart(Box::new(self.clone())),
        }
    }

    /// Conservative continuity test: `false` whenever the tree contains a
    /// jump that is not cancelled structurally.
    pub fn is_continuous(&self) -> bool {
        match self {
            ScalarField::Constant(_) | ScalarField::Polynomial(_) => true,
            ScalarField::Indicator(r) => matches!(r, Region::Empty | Region::Whole),
            ScalarField::RadialAngular { angular, .. } => {
                angular.as_constant().is_some() || !angular.is_piecewise_constant()
            }
            ScalarField::Periodic1D { steps, .. } => steps.iter().all(|s| s[1] == steps[0][1]),
            ScalarField::Shift { field, .. } | ScalarField::Scale { field, .. } | ScalarField::Power { field, .. } => {
                field.is_continuous()
            }
            ScalarField::PosPart(f) | ScalarField::NegPart(f) => f.is_continuous(),
            ScalarField::Sum(v) | ScalarField::Product(v) => v.iter().all(|f| f.is_continuous()),
        }
    }

    /// Is the field piecewise constant along every ray?
    pub fn is_piecewise_constant(&self) -> bool {
        match self {
            ScalarField::Constant(_) | ScalarField::Indicator(_) | ScalarField::Periodic1D { .. } => true,
            ScalarField::Polynomial(terms) => terms.iter().all(|t| t.coef == 0.0 || t.exponents.iter().all(|e| *e == 0)),
            ScalarField::RadialAngular { profile, angular } => {
                matches!(profile, RadialProfile::One) && angular.is_piecewise_constant()
            }
            ScalarField::Shift { field, .. } | ScalarField::Scale { field, .. } | ScalarField::Power { field, .. } => {
                field.is_piecewise_constant()
            }
            ScalarField::PosPart(f) | ScalarField::NegPart(f) => f.is_piecewise_constant(),
            ScalarField::Sum(v) | ScalarField::Product(v) => v.iter().all(|f| f.is_piecewise_constant()),
        }
    }

    /// Planar directions from `c` along which the field jumps or kinks
    /// through `c` itself; see [`Region::apex_angles`].
    pub fn apex_angles(&self, c: &[f64], out: &mut Vec<f64>) {
        if c.len() != 2 {
            return;
        }
        match self {
            ScalarField::Constant(_) | ScalarField::Polynomial(_) | ScalarField::Periodic1D { .. } => {}
            ScalarField::Indicator(r) => r.apex_angles(c, out),
            ScalarField::RadialAngular { angular, .. } => {
                if norm(c) <= 1e-12 {
                    angular.sphere_breaks(2, out);
                }
            }
            ScalarField::Shift { field, by } => field.apex_angles(&[c[0] - by[0], c[1] - by[1]], out),
            ScalarField::Sum(v) | ScalarField::Product(v) => v.iter().for_each(|g| g.apex_angles(c, out)),
            ScalarField::Scale { field, .. }
            | ScalarField::PosPart(field)
            | ScalarField::NegPart(field)
            | ScalarField::Power { field, .. } => field.apex_angles(c, out),
        }
    }

    /// Pushes `ln r` where the field may fail to be smooth along
    /// `c + r u`, restricted to `(t_lo, t_hi)`. Periodic fields contribute
    /// at most [`MAX_PERIODIC_BREAKS`] points.
    pub fn ray_breaks(&self, c: &[f64], u: &[f64], t_lo: f64, t_hi: f64, out: &mut Vec<f64>) {
        match self {
            ScalarField::Constant(_) | ScalarField::Polynomial(_) => {}
            ScalarField::Indicator(r) => r.ray_breaks(c, u, t_lo, t_hi, out),
            ScalarField::RadialAngular { profile, angular } => {
                angular.ray_breaks(c, u, t_lo, t_hi, out);
                if let RadialProfile::Bump { radius } = profile {
                    Region::Ball { center: vec![0.0; c.len()], radius: *radius }.ray_breaks(c, u, t_lo, t_hi, out);
                }
                // the origin, where the direction is undefined
                Region::Sector(AngularSet::Hemisphere(u.to_vec())).ray_breaks(c, u, t_lo, t_hi, out);
            }
            ScalarField::Periodic1D { steps, period } => {
                let (r_lo, r_hi) = (t_lo.exp(), t_hi.exp().min(1e300));
                let (a, b) = if u[0] > 0.0 { (c[0] + r_lo, c[0] + r_hi) } else { (c[0] - r_hi, c[0] - r_lo) };
                let count = ((b - a) / period).ceil() * steps.len() as f64;
                if !(count <= MAX_PERIODIC_BREAKS as f64) {
                    return;
                }
                let k0 = (a / period).floor() as i64;
                let k1 = (b / period).ceil() as i64;
                for k in k0..=k1 {
                    for s in steps {
                        let x = k as f64 * period + s[0];
                        let r = (x - c[0]) * u[0].signum();
                        if r > 0.0 {
                            let t = r.ln();
                            if t > t_lo && t < t_hi {
                                out.push(t);
                            }
                        }
                    }
                }
            }
            ScalarField::Shift { field, by } => {
                let y: Vec<f64> = c.iter().zip(by).map(|(a, b)| a - b).collect();
                field.ray_breaks(&y, u, t_lo, t_hi, out);
            }
            ScalarField::Sum(v) | ScalarField::Product(v) => v.iter().for_each(|f| f.ray_breaks(c, u, t_lo, t_hi, out)),
            ScalarField::Scale { field, .. } | ScalarField::Power { field, .. } => field.ray_breaks(c, u, t_lo, t_hi, out),
            ScalarField::PosPart(f) | ScalarField::NegPart(f) => {
                // sign changes of a piecewise constant field sit at its own breaks;
                // for smooth fields the kink is left to adaptive refinement
                f.ray_breaks(c, u, t_lo, t_hi, out)
            }
        }
    }

    /// Structural tail model.
    pub fn tail_model(&self) -> TailModel {
        match self {
            ScalarField::Constant(c) => TailModel::angular(AngularFunction::Constant(*c)),
            ScalarField::Indicator(r) => region_tail(r),
            ScalarField::Polynomial(terms) => {
                let mut c = 0.0;
                for t in terms {
                    if t.exponents.iter().any(|e| *e > 0) {
                        if t.coef != 0.0 {
                            return TailModel::Unknown;
                        }
                    } else {
                        c += t.coef;
                    }
                }
                TailModel::angular(AngularFunction::Constant(c))
            }
            ScalarField::RadialAngular { profile, angular } => match *profile {
                RadialProfile::One => TailModel::angular(angular.clone()),
                RadialProfile::Saturating { scale } => {
                    TailModel::AngularLimit { limit: angular.clone(), settle_radius: SETTLE_LOG * scale, offset: 0.0 }
                }
                RadialProfile::Decaying { scale } => TailModel::AngularLimit {
                    limit: AngularFunction::Constant(0.0),
                    settle_radius: SETTLE_LOG * scale,
                    offset: 0.0,
                },
                RadialProfile::Bump { radius } => TailModel::CompactSupport { radius },
            },
            ScalarField::Periodic1D { steps, period } => {
                TailModel::PeriodicMean { mean: periodic_mean(steps, *period), period: *period, settle_radius: 0.0 }
            }
            ScalarField::Shift { field, by } => field.tail_model().shifted(norm(by)),
            ScalarField::Scale { factor, field } => match field.tail_model() {
                TailModel::AngularLimit { limit, settle_radius, offset } => TailModel::AngularLimit {
                    limit: match limit {
                        AngularFunction::Constant(c) => AngularFunction::Constant(factor * c),
                        g => AngularFunction::Scale { factor: *factor, of: Box::new(g) },
                    },
                    settle_radius,
                    offset,
                },
                TailModel::PeriodicMean { mean, period, settle_radius } => {
                    TailModel::PeriodicMean { mean: factor * mean, period, settle_radius }
                }
                t => t,
            },
            ScalarField::Sum(v) => {
                let tails: Vec<TailModel> = v.iter().map(|f| f.tail_model()).collect();
                if tails.iter().all(|t| matches!(t, TailModel::CompactSupport { .. })) {
                    let radius = tails.iter().map(|t| t.settle_radius()).fold(0.0, f64::max);
                    return TailModel::CompactSupport { radius };
                }
                let periodic: Vec<&TailModel> =
                    tails.iter().filter(|t| matches!(t, TailModel::PeriodicMean { .. })).collect();
                match common_period(&periodic) {
                    None if periodic.is_empty() => combine_angular(&tails, |gs| simplify_sum(gs)),
                    None => TailModel::Unknown,
                    Some(period) => {
                        let mut m = 0.0;
                        let mut settle = 0.0f64;
                        for t in &tails {
                            match t {
                                TailModel::PeriodicMean { mean, settle_radius, .. } => {
                                    m += mean;
                                    settle = settle.max(*settle_radius);
                                }
                                other => match other.as_angular() {
                                    Some((g, s, _)) => match g.as_constant() {
                                        Some(c) => {
                                            m += c;
                                            settle = settle.max(s);
                                        }
                                        None => return TailModel::Unknown,
                                    },
                                    None => return TailModel::Unknown,
                                },
                            }
                        }
                        TailModel::PeriodicMean { mean: m, period, settle_radius: settle }
                    }
                }
            }
            ScalarField::Product(v) => {
                let tails: Vec<TailModel> = v.iter().map(|f| f.tail_model()).collect();
                if let Some(radius) = tails
                    .iter()
                    .filter_map(|t| match t {
                        TailModel::CompactSupport { radius } => Some(*radius),
                        _ => None,
                    })
                    .reduce(f64::min)
                {
                    return TailModel::CompactSupport { radius };
                }
                let periodic: Vec<&TailModel> =
                    tails.iter().filter(|t| matches!(t, TailModel::PeriodicMean { .. })).collect();
                if periodic.len() > 1 {
                    return match common_period(&periodic) {
                        Some(period) => {
                            let settle = tails.iter().map(|t| t.settle_radius()).fold(0.0, f64::max);
                            let all_known = tails.iter().all(|t| !matches!(t, TailModel::Unknown));
                            match (all_known, self.mean_over(settle, period)) {
                                (true, Some(mean)) => TailModel::PeriodicMean { mean, period, settle_radius: settle },
                                _ => TailModel::Unknown,
                            }
                        }
                        None => TailModel::Unknown,
                    };
                }
                match periodic.len() {
                    0 => combine_angular(&tails, AngularFunction::Product),
                    1 => {
                        let TailModel::PeriodicMean { mean, period, settle_radius } = *periodic[0] else {
                            unreachable!()
                        };
                        let mut m = mean;
                        let mut settle = settle_radius;
                        for t in &tails {
                            if let TailModel::PeriodicMean { .. } = t {
                                continue;
                            }
                            match t.as_angular().and_then(|(g, s, _)| g.as_constant().map(|c| (c, s))) {
                                Some((c, s)) => {
                                    m *= c;
                                    settle = settle.max(s);
                                }
                                None => return TailModel::Unknown,
                            }
                        }
                        TailModel::PeriodicMean { mean: m, period, settle_radius: settle }
                    }
                    _ => TailModel::Unknown,
                }
            }
            ScalarField::PosPart(f) => self.transformed_tail(f, AngularFunction::PosPart),
            ScalarField::NegPart(f) => self.transformed_tail(f, AngularFunction::NegPart),
            ScalarField::Power { field, k } => {
                if *k == 0 {
                    return TailModel::angular(AngularFunction::Constant(1.0));
                }
                let k = *k;
                self.transformed_tail(field, move |g| AngularFunction::Power { of: g, k })
            }
        }
    }

    /// Tail of `ψ(f)` for a pointwise map `ψ` with `ψ(0) = 0`.
    fn transformed_tail(&self, inner: &ScalarField, wrap: impl FnOnce(Box<AngularFunction>) -> AngularFunction) -> TailModel {
        match inner.tail_model() {
            TailModel::CompactSupport { radius } => TailModel::CompactSupport { radius },
            TailModel::AngularLimit { limit, settle_radius, offset } => {
                let g = wrap(Box::new(limit));
                let g = match g.as_constant() {
                    Some(c) => AngularFunction::Constant(c),
                    None => g,
                };
                TailModel::AngularLimit { limit: g, settle_radius, offset }
            }
            TailModel::PeriodicMean { period, settle_radius, .. } => {
                let a = settle_radius;
                match self.mean_over(a, period) {
                    Some(mean) => TailModel::PeriodicMean { mean, period, settle_radius },
                    None => TailModel::Unknown,
                }
            }
            TailModel::Unknown => TailModel::Unknown,
        }
    }

    /// `(1/T) ∫_a^{a+T} f` for a one-dimensional field.
    pub fn mean_over(&self, a: f64, period: f64) -> Option<f64> {
        let mut ts = Vec::new();
        let c = [a];
        self.ray_breaks(&c, &[1.0], f64::NEG_INFINITY, period.ln(), &mut ts);
        let mut b: Vec<f64> = ts.iter().map(|t| a + t.exp()).collect();
        b.push(a);
        b.push(a + period);
        b.sort_by(f64::total_cmp);
        b.dedup();
        let r = quad::adaptive_pieces(|x| self.value(&[x]), &b, Tol::new(1e-14, 1e-12));
        r.converged.then_some(r.value / period)
    }
}

fn common_period(tails: &[&TailModel]) -> Option<f64> {
    let mut period = None;
    for t in tails {
        if let TailModel::PeriodicMean { period: q, .. } = t {
            match period {
                None => period = Some(*q),
                Some(p) if p == *q => {}
                Some(_) => return None,
            }
        }
    }
    period
}

/// Cap on the breakpoints a periodic field reports per ray.
pub const MAX_PERIODIC_BREAKS: usize = 1_000_000;

fn simplify_sum(gs: Vec<AngularFunction>) -> AngularFunction {
    let mut c = 0.0;
    let mut rest = Vec::new();
    for g in gs {
        match g.as_constant() {
            Some(v) => c += v,
            None => rest.push(g),
        }
    }
    if rest.is_empty() {
        return AngularFunction::Constant(c);
    }
    if c != 0.0 {
        rest.insert(0, AngularFunction::Constant(c));
    }
    if rest.len() == 1 {
        rest.pop().unwrap()
    } else {
        AngularFunction::Sum(rest)
    }
}

fn periodic_value(steps: &[[f64; 2]], period: f64, x: f64) -> f64 {
    let y = x.rem_euclid(period);
    let i = steps.partition_point(|s| s[0] <= y);
    steps[i.saturating_sub(1)][1]
}

/// Mean of a periodic step profile.
pub fn periodic_mean(steps: &[[f64; 2]], period: f64) -> f64 {
    let mut total = 0.0;
    for (i, s) in steps.iter().enumerate() {
        let end = steps.get(i + 1).map_or(period, |n| n[0]);
        total += s[1] * (end - s[0]);
    }
    total / period
}
