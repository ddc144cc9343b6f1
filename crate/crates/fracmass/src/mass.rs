//! The `p`-mass at infinity `α_p(u) = lim_{s→0} s ∫_{B_1^c} u(y) |y|^{-(d+sp)} dy`.
//!
//! The analytic route integrates the declared angular limit over the
//! sphere. The numeric route evaluates the truncated tail integral for each
//! `s` by integrating along rays in the variable `t = ln r`, where the
//! kernel becomes `e^{-spt}`, and then extrapolates `s → 0`.

use serde::Serialize;

use crate::asymptotics::{self, SSweepResult};
use crate::error::{check_dim, check_s, Error, Result};
use crate::fields::{ScalarField, TailModel};
use crate::geometry::{norm, sphere_measure, FAR_LOG_RADIUS};
use crate::quad::{self, EstimateWithError, QuadratureSpec, Tol};
use crate::sphere;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassAtInfinity {
    pub p: u32,
    pub value: f64,
    pub route: Route,
    pub error: f64,
}

fn check_p(p: u32) -> Result<()> {
    if p >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("p must be at least 1".into()))
    }
}

/// `α_p(f) = (1/p) ∫_{S^{d-1}} u_∞` from the tail model.
pub fn alpha_analytic(f: &ScalarField, p: u32, d: usize) -> Result<MassAtInfinity> {
    check_p(p)?;
    f.validate(d)?;
    let pf = p as f64;
    let (value, error) = match f.tail_model() {
        TailModel::CompactSupport { .. } => (0.0, 0.0),
        TailModel::AngularLimit { limit, .. } => {
            let e = limit.sphere_integral(d);
            (e.value / pf, e.error / pf)
        }
        TailModel::PeriodicMean { mean, .. } => {
            if d != 1 {
                return Err(Error::InvalidField("periodic tails are one-dimensional".into()));
            }
            (2.0 * mean / pf, 0.0)
        }
        TailModel::Unknown => return Err(Error::UnknownTail("no declared limit at infinity".into())),
    };
    Ok(MassAtInfinity { p, value, route: Route::Analytic, error })
}

/// `α_1 = dω_d` for the constant one, divided by `p`.
pub fn alpha_of_one(p: u32, d: usize) -> f64 {
    sphere_measure(d).value / p as f64
}

/// Extrapolated `s·∫_{B_R^c} f(y)|y|^{-(d+sp)} dy` over an s-grid.
pub fn alpha_numeric(
    f: &ScalarField,
    p: u32,
    d: usize,
    s_grid: &[f64],
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<SSweepResult> {
    let origin = vec![0.0; d];
    let r = asymptotics::sweep(|s| alpha_translated(f, p, d, &origin, radius, s, spec), s_grid)?;
    check_divergence(&r)?;
    Ok(r)
}

/// [`alpha_numeric`] summarized as a [`MassAtInfinity`].
pub fn alpha_numeric_mass(f: &ScalarField, p: u32, d: usize, spec: &QuadratureSpec) -> Result<MassAtInfinity> {
    let r = alpha_numeric(f, p, d, &asymptotics::default_grid(), 1.0, spec)?;
    Ok(MassAtInfinity { p, value: r.limit, route: Route::Numeric, error: r.limit_error })
}

fn check_divergence(r: &SSweepResult) -> Result<()> {
    let mut v: Vec<(f64, f64)> = r.points.iter().map(|p| (p.s, p.estimate.value.abs())).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    let growing = v.windows(2).all(|w| w[1].1 > 1.5 * w[0].1);
    let (first, last) = (v[0].1, v[v.len() - 1].1);
    if growing && last > 1e3 * first.max(1e-300) {
        return Err(Error::DivergentTail(format!("estimate grows from {first:e} to {last:e} along the grid")));
    }
    Ok(())
}

/// `s·∫_{|y−x|>R} f(y)|x−y|^{-(d+sp)} dy` at a single `s`.
pub fn alpha_translated(
    f: &ScalarField,
    p: u32,
    d: usize,
    x: &[f64],
    radius: f64,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<EstimateWithError> {
    check_s(s)?;
    check_p(p)?;
    check_dim(d)?;
    f.validate(d)?;
    spec.validate()?;
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter("R must be positive".into()));
    }
    let e = s * p as f64;
    let engine = RayEngine::new(f, x, e)?;
    let t0 = radius.ln();
    let ray_err = std::cell::Cell::new(0.0f64);
    let failed = std::cell::Cell::new(false);
    let mut breaks = Vec::new();
    if norm(x) == 0.0 {
        if let Some(g) = f.tail_model().limit() {
            g.sphere_breaks(d, &mut breaks);
        }
    }
    let rel = (spec.target_rel_error * 1e-4).clamp(1e-11, 1e-6);
    let scale = sphere_measure(d).value * f_scale(f);
    let est = sphere::integrate_tol(
        d,
        |u| {
            let (v, err) = engine.integral(u, t0);
            if !v.is_finite() {
                failed.set(true);
                return 0.0;
            }
            ray_err.set(ray_err.get().max(s * err));
            s * v
        },
        &breaks,
        Tol { abs: rel * scale * 1e-2, rel, max_intervals: 1000 },
    );
    if failed.get() {
        return Err(Error::DivergentTail("non-finite ray integral".into()));
    }
    let err = est.error + sphere_measure(d).value * ray_err.get();
    Ok(EstimateWithError::analytic(est.value, err))
}

fn f_scale(f: &ScalarField) -> f64 {
    match f.tail_model().limit() {
        Some(g) => g.sup_abs().max(1e-3),
        None => 1.0,
    }
}

/// Integrals `∫_{t0}^∞ f(c + e^t u) e^{-et} dt` along rays from a fixed
/// centre.
pub(crate) struct RayEngine<'a> {
    f: &'a ScalarField,
    c: Vec<f64>,
    e: f64,
    kind: Kind,
    piecewise: bool,
}

enum Kind {
    Compact { radius: f64 },
    Angular { t_far: f64 },
    Periodic { period: f64, settle: f64 },
    Truncated,
}

/// Number of whole periods summed exactly before the Euler–Maclaurin
/// remainder.
const PERIODS_SUMMED: usize = 2000;

impl<'a> RayEngine<'a> {
    pub(crate) fn new(f: &'a ScalarField, c: &[f64], e: f64) -> Result<Self> {
        let piecewise = f.is_piecewise_constant();
        let cn = norm(c);
        let kind = match f.tail_model() {
            TailModel::CompactSupport { radius } => Kind::Compact { radius },
            TailModel::AngularLimit { settle_radius, offset, .. } => {
                Kind::Angular { t_far: FAR_LOG_RADIUS + (cn + settle_radius + offset).ln_1p() + 1.0 }
            }
            TailModel::PeriodicMean { period, settle_radius, .. } => {
                if c.len() != 1 {
                    return Err(Error::InvalidField("periodic tails are one-dimensional".into()));
                }
                Kind::Periodic { period, settle: settle_radius }
            }
            TailModel::Unknown => {
                if !piecewise {
                    let probe = f.value_far(&unit(c.len()), FAR_LOG_RADIUS + 10.0);
                    if !probe.is_finite() {
                        return Err(Error::DivergentTail("field grows without bound".into()));
                    }
                    return Err(Error::UnknownTail("field is neither piecewise constant nor declared at infinity".into()));
                }
                Kind::Truncated
            }
        };
        Ok(Self { f, c: c.to_vec(), e, kind, piecewise })
    }

    /// Returns the ray integral and an error estimate.
    pub(crate) fn integral(&self, u: &[f64], t0: f64) -> (f64, f64) {
        let e = self.e;
        match self.kind {
            Kind::Compact { radius } => {
                let t_end = (radius + norm(&self.c)).ln();
                if t_end <= t0 {
                    (0.0, 0.0)
                } else {
                    self.pieces(u, t0, t_end)
                }
            }
            Kind::Angular { t_far } => {
                let t_end = t_far.max(t0);
                let (v, err) = if t_end > t0 { self.pieces(u, t0, t_end) } else { (0.0, 0.0) };
                let far = self.f.value_far(u, t_end + 1.0);
                (v + far * (-e * t_end).exp() / e, err)
            }
            Kind::Truncated => {
                let t_end = t0 + 40.0 / e;
                self.pieces(u, t0, t_end)
            }
            Kind::Periodic { period, settle } => self.periodic(u, t0, period, settle),
        }
    }

    /// `∫_a^b f e^{-et} dt` split at the field's ray breakpoints.
    fn pieces(&self, u: &[f64], a: f64, b: f64) -> (f64, f64) {
        let e = self.e;
        let mut ts = Vec::new();
        self.f.ray_breaks(&self.c, u, a, b, &mut ts);
        ts.push(a);
        ts.push(b);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let mut total = 0.0;
        let mut err = 0.0;
        for w in ts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if self.piecewise {
                let v = self.f.value_on_ray(&self.c, u, 0.5 * (lo + hi));
                if v != 0.0 {
                    total += v * (-e * lo).exp() * -(-e * (hi - lo)).exp_m1() / e;
                }
            } else {
                let r = quad::adaptive(
                    |t| self.f.value_on_ray(&self.c, u, t) * (-e * t).exp(),
                    lo,
                    hi,
                    Tol { abs: 1e-14 / e.max(1e-300).min(1.0), rel: 1e-12, max_intervals: 500 },
                );
                total += r.value;
                err += r.error;
            }
        }
        (total, err)
    }

    /// Periodic tail in `d = 1`: exact sums over whole periods, then an
    /// Euler–Maclaurin remainder.
    fn periodic(&self, u: &[f64], t0: f64, period: f64, settle: f64) -> (f64, f64) {
        let e = self.e;
        let r_start = t0.exp();
        let r0 = r_start.max(settle + norm(&self.c) + period);
        let (mut total, mut err) = if r0 > r_start { self.pieces(u, t0, r0.ln()) } else { (0.0, 0.0) };
        // step structure of one period in r, relative to r0
        let mut ts = Vec::new();
        self.f.ray_breaks(&self.c, u, r0.ln(), (r0 + period).ln(), &mut ts);
        let mut rs: Vec<f64> = ts.iter().map(|t| t.exp() - r0).filter(|v| *v > 0.0 && *v < period).collect();
        rs.push(0.0);
        rs.push(period);
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        let steps: Vec<(f64, f64, f64)> = rs
            .windows(2)
            .map(|w| {
                let mid = r0 + 0.5 * (w[0] + w[1]);
                (w[0], w[1], self.f.value(&[self.c[0] + u[0] * mid]))
            })
            .filter(|s| s.2 != 0.0)
            .collect();
        // r^{-1-e} integrated in t-space: ∫_A^B r^{-1-e} dr
        let g = |y: f64| -> f64 {
            steps.iter().map(|&(a, b, v)| v * quad::power_integral(y + a, y + b, -1.0 - e)).sum()
        };
        for k in 0..PERIODS_SUMMED {
            total += g(r0 + k as f64 * period);
        }
        let y = r0 + PERIODS_SUMMED as f64 * period;
        let integral: f64 = steps.iter().map(|&(a, b, v)| v * quad::power_integral(y + a, y + b, -e)).sum::<f64>() / (e * period);
        let d1: f64 = period * steps.iter().map(|&(a, b, v)| v * ((y + b).powf(-1.0 - e) - (y + a).powf(-1.0 - e))).sum::<f64>();
        let d3: f64 = period.powi(3)
            * (1.0 + e)
            * (2.0 + e)
            * steps.iter().map(|&(a, b, v)| v * ((y + b).powf(-3.0 - e) - (y + a).powf(-3.0 - e))).sum::<f64>();
        total += integral + 0.5 * g(y) - d1 / 12.0 + d3 / 720.0;
        err += d3.abs() / 720.0 + 1e-15 * total.abs();
        (total, err)
    }
}

fn unit(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}
