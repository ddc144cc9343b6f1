//! Regions of ℝ^d built by constructive solid geometry.
//!
//! Primitive nodes are balls, boxes, half-spaces, angular sectors with apex
//! at the origin, and radial shell towers; composite nodes are complement,
//! union, intersection and translation. Membership is exact. Every region
//! can also report where a ray crosses its boundary, which the quadrature
//! code uses to split integrals into smooth pieces.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quad::{self, EstimateWithError, QuadratureSpec, Tol};

/// Maximum nesting depth of composite nodes.
pub const MAX_DEPTH: usize = 8;

/// Log-radius beyond which a point is treated as lying at infinity in its
/// direction (`e^46 ≈ 10^20`).
pub const FAR_LOG_RADIUS: f64 = 46.0;

/// A set of directions on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularSet {
    /// `d = 2`: union of arcs `[start, end]` in radians, counter-clockwise.
    Arcs(Vec<[f64; 2]>),
    /// `d = 3`: union of spherical caps.
    Caps(Vec<Cap>),
    /// `d = 1`: the chosen signs among `{-1, +1}`.
    Signs(Vec<i8>),
    /// Any `d`: directions with positive component along `normal`.
    Hemisphere(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cap {
    pub axis: Vec<f64>,
    pub half_angle: f64,
}

/// Increasing radii `ρ_0 < ρ_1 < …`; the shell set is `⋃_k [ρ_{2k}, ρ_{2k+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShellPattern {
    /// `ρ_j = start · ratio^j`. Log-periodic, so its mass at infinity exists.
    Geometric { start: f64, ratio: f64 },
    /// `ln ρ_j = ln(start) · growth^j`. Self-similar in `ln r`; the
    /// truncated tail integrals oscillate as `s → 0`.
    Tower { start: f64, growth: f64 },
}

impl Default for ShellPattern {
    fn default() -> Self {
        ShellPattern::Tower { start: 2.0, growth: 2.0 }
    }
}

impl ShellPattern {
    fn validate(&self) -> Result<()> {
        match *self {
            ShellPattern::Geometric { start, ratio } if start > 0.0 && ratio > 1.0 => Ok(()),
            ShellPattern::Tower { start, growth } if start > 1.0 && growth > 1.0 => Ok(()),
            _ => Err(Error::InvalidRegion("shell pattern needs start>0 (>1 for towers) and ratio>1".into())),
        }
    }

    /// `ln ρ_j`.
    pub fn log_radius(&self, j: u64) -> f64 {
        match *self {
            ShellPattern::Geometric { start, ratio } => start.ln() + j as f64 * ratio.ln(),
            ShellPattern::Tower { start, growth } => start.ln() * growth.powf(j as f64),
        }
    }

    /// Index `j` with `ln ρ_j ≤ t < ln ρ_{j+1}`, or `None` below `ρ_0`.
    pub fn index(&self, t: f64) -> Option<u64> {
        let l0 = self.log_radius(0);
        if !(t >= l0) {
            return None;
        }
        let raw = match *self {
            ShellPattern::Geometric { ratio, .. } => (t - l0) / ratio.ln(),
            ShellPattern::Tower { growth, .. } => (t / l0).ln() / growth.ln(),
        };
        let mut j = raw.floor().max(0.0) as u64;
        // guard against rounding at the boundaries
        while j > 0 && self.log_radius(j) > t {
            j -= 1;
        }
        while self.log_radius(j + 1) <= t {
            j += 1;
        }
        Some(j)
    }

    pub fn contains_log(&self, t: f64) -> bool {
        matches!(self.index(t), Some(j) if j % 2 == 0)
    }
}

/// A region of ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Empty,
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    #[serde(rename = "box")]
    Cuboid { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : x·normal > offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    /// Cone over an angular set, apex at the origin.
    Sector(AngularSet),
    RadialShells(ShellPattern),
    Shift { region: Box<Region>, by: Vec<f64> },
    Complement(Box<Region>),
    Union(Vec<Region>),
    Intersection(Vec<Region>),
}

/// `dω_d`, the surface measure of the unit sphere in ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereConstant {
    pub d: usize,
    pub value: f64,
}

/// Surface measure of `S^{d-1}`: 2, 2π, 4π for `d = 1, 2, 3`.
pub fn sphere_measure(d: usize) -> SphereConstant {
    let value = match d {
        1 => 2.0,
        2 => TAU,
        3 => 2.0 * TAU,
        _ => {
            let h = d as f64 / 2.0;
            d as f64 * PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
        }
    };
    SphereConstant { d, value }
}

/// Lebesgue measure of the unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    sphere_measure(d).value / d as f64
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cross2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn check_len(v: &[f64], d: usize) -> Result<()> {
    if v.len() == d {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: d, got: v.len() })
    }
}

impl AngularSet {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            AngularSet::Arcs(arcs) if d == 2 => {
                for a in arcs {
                    if !(a[1] > a[0]) || !a[0].is_finite() || !a[1].is_finite() {
                        return Err(Error::InvalidRegion("arc needs finite start < end".into()));
                    }
                }
                Ok(())
            }
            AngularSet::Caps(caps) if d == 3 => {
                for c in caps {
                    check_len(&c.axis, 3)?;
                    if norm(&c.axis) == 0.0 || !(c.half_angle >= 0.0 && c.half_angle <= PI) {
                        return Err(Error::InvalidRegion("cap needs a nonzero axis and angle in [0,π]".into()));
                    }
                }
                Ok(())
            }
            AngularSet::Signs(s) if d == 1 => {
                if s.iter().all(|v| *v == 1 || *v == -1) {
                    Ok(())
                } else {
                    Err(Error::InvalidRegion("signs must be ±1".into()))
                }
            }
            AngularSet::Hemisphere(n) => {
                check_len(n, d)?;
                if norm(n) == 0.0 {
                    return Err(Error::InvalidRegion("hemisphere normal is zero".into()));
                }
                Ok(())
            }
            _ => Err(Error::InvalidRegion(format!("angular set does not match dimension {d}"))),
        }
    }

    /// Membership of a direction (any nonzero vector).
    pub fn contains_dir(&self, u: &[f64]) -> bool {
        match self {
            AngularSet::Arcs(arcs) => {
                let phi = u[1].atan2(u[0]);
                arcs.iter().any(|a| a[1] - a[0] >= TAU || (phi - a[0]).rem_euclid(TAU) < a[1] - a[0])
            }
            AngularSet::Caps(caps) => {
                let n = norm(u);
                caps.iter().any(|c| dot(u, &c.axis) >= n * norm(&c.axis) * c.half_angle.cos())
            }
            AngularSet::Signs(s) => {
                let sign = if u[0] >= 0.0 { 1 } else { -1 };
                s.contains(&sign)
            }
            AngularSet::Hemisphere(n) => dot(u, n) > 0.0,
        }
    }

    /// Disjoint sorted arcs in `[0, 2π)` covering an `Arcs` set.
    pub fn arc_intervals(arcs: &[[f64; 2]]) -> Vec<(f64, f64)> {
        let mut pieces = Vec::new();
        for a in arcs {
            let len = a[1] - a[0];
            if len >= TAU {
                return vec![(0.0, TAU)];
            }
            let s = a[0].rem_euclid(TAU);
            let e = s + len;
            if e <= TAU {
                pieces.push((s, e));
            } else {
                pieces.push((s, TAU));
                pieces.push((0.0, e - TAU));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in pieces {
            match out.last_mut() {
                Some(last) if p.0 <= last.1 => last.1 = last.1.max(p.1),
                _ => out.push(p),
            }
        }
        out
    }

    /// Angles (d = 2) where membership may change.
    pub fn angular_breaks(&self) -> Vec<f64> {
        match self {
            AngularSet::Arcs(arcs) => {
                Self::arc_intervals(arcs).iter().flat_map(|&(a, b)| [a, b]).collect()
            }
            AngularSet::Hemisphere(n) if n.len() == 2 => {
                let phi = n[1].atan2(n[0]);
                vec![(phi - PI / 2.0).rem_euclid(TAU), (phi + PI / 2.0).rem_euclid(TAU)]
            }
            _ => Vec::new(),
        }
    }

    /// Boundary directions for arcs, as unit vectors.
    fn edge_dirs(&self) -> Vec<[f64; 2]> {
        match self {
            AngularSet::Arcs(arcs) => Self::arc_intervals(arcs)
                .iter()
                .filter(|(a, b)| b - a < TAU)
                .flat_map(|&(a, b)| [[a.cos(), a.sin()], [b.cos(), b.sin()]])
                .collect(),
            AngularSet::Hemisphere(n) if n.len() == 2 => {
                let m = norm(n);
                vec![[-n[1] / m, n[0] / m], [n[1] / m, -n[0] / m]]
            }
            _ => Vec::new(),
        }
    }

    fn is_full(&self, d: usize) -> bool {
        match self {
            AngularSet::Arcs(arcs) => {
                let iv = Self::arc_intervals(arcs);
                iv.len() == 1 && iv[0].0 <= 0.0 && iv[0].1 >= TAU
            }
            AngularSet::Signs(s) => d == 1 && s.contains(&1) && s.contains(&-1),
            AngularSet::Caps(c) => c.iter().any(|c| c.half_angle >= PI),
            AngularSet::Hemisphere(_) => false,
        }
    }

    /// Distance from `x` to the boundary of the cone over this set.
    fn cone_distance(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match self {
            AngularSet::Signs(_) => r,
            AngularSet::Hemisphere(n) => dot(x, n).abs() / norm(n),
            AngularSet::Arcs(_) => {
                if self.is_full(2) {
                    return f64::INFINITY;
                }
                self.edge_dirs()
                    .iter()
                    .map(|e| {
                        let t = dot(x, e).max(0.0);
                        ((x[0] - t * e[0]).powi(2) + (x[1] - t * e[1]).powi(2)).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            AngularSet::Caps(caps) => caps
                .iter()
                .map(|c| {
                    if r == 0.0 {
                        return 0.0;
                    }
                    let cosang = (dot(x, &c.axis) / (r * norm(&c.axis))).clamp(-1.0, 1.0);
                    let diff = (cosang.acos() - c.half_angle).abs();
                    if diff >= PI / 2.0 {
                        r
                    } else {
                        r * diff.sin()
                    }
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Surface measure of the set on `S^{d-1}`.
    pub fn measure(&self, d: usize) -> f64 {
        match self {
            AngularSet::Arcs(arcs) => Self::arc_intervals(arcs).iter().map(|(a, b)| b - a).sum(),
            AngularSet::Signs(s) => {
                let mut v = s.clone();
                v.sort();
                v.dedup();
                v.len() as f64
            }
            AngularSet::Hemisphere(_) => sphere_measure(d).value / 2.0,
            AngularSet::Caps(caps) if caps.len() == 1 => TAU * (1.0 - caps[0].half_angle.cos()),
            AngularSet::Caps(_) => {
                // overlapping caps: integrate membership over the sphere
                crate::sphere::integrate(3, |u| if self.contains_dir(u) { 1.0 } else { 0.0 }, &[]).value
            }
        }
    }

    /// Ray crossings (`r > 0`) of the cone boundary for the ray `c + r u`.
    fn ray_roots(&self, c: &[f64], u: &[f64], out: &mut Vec<f64>) {
        match self {
            AngularSet::Signs(_) => out.push(-c[0] / u[0]),
            AngularSet::Hemisphere(n) => {
                let un = dot(u, n);
                if un != 0.0 {
                    out.push(-dot(c, n) / un);
                }
            }
            AngularSet::Arcs(_) => {
                for e in self.edge_dirs() {
                    let den = cross2(u, &e);
                    if den != 0.0 {
                        let r = -cross2(c, &e) / den;
                        let t = (c[0] + r * u[0]) * e[0] + (c[1] + r * u[1]) * e[1];
                        if t >= 0.0 {
                            out.push(r);
                        }
                    }
                }
                // passing through the apex
                if cross2(c, u).abs() <= 1e-14 * norm(c).max(1e-300) {
                    out.push(-dot(c, u));
                }
            }
            AngularSet::Caps(caps) => {
                for cap in caps {
                    let an = norm(&cap.axis);
                    let a: Vec<f64> = cap.axis.iter().map(|v| v / an).collect();
                    let k = cap.half_angle.cos().powi(2);
                    let (ua, ca) = (dot(u, &a), dot(c, &a));
                    let qa = ua * ua - k;
                    let qb = 2.0 * (ca * ua - k * dot(c, u));
                    let qc = ca * ca - k * dot(c, c);
                    push_quadratic_roots(qa, qb, qc, out);
                }
                out.push(-dot(c, u));
            }
        }
    }
}

fn push_quadratic_roots(a: f64, b: f64, c: f64, out: &mut Vec<f64>) {
    if a.abs() < 1e-300 {
        if b != 0.0 {
            out.push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q != 0.0 {
        out.push(q / a);
        out.push(c / q);
    } else {
        out.push(0.0);
    }
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn unit_ball(d: usize) -> Self {
        Region::Ball { center: vec![0.0; d], radius: 1.0 }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Region::Cuboid { lo: vec![lo], hi: vec![hi] }
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Self {
        Region::HalfSpace { normal, offset }
    }

    /// A planar sector `{θ ∈ [start, start + width]}`.
    pub fn sector2(start: f64, width: f64) -> Self {
        Region::Sector(AngularSet::Arcs(vec![[start, start + width]]))
    }

    pub fn complement(self) -> Self {
        Region::Complement(Box::new(self))
    }

    pub fn shifted(self, by: Vec<f64>) -> Self {
        Region::Shift { region: Box::new(self), by }
    }

    pub fn depth(&self) -> usize {
        match self {
            Region::Shift { region, .. } | Region::Complement(region) => 1 + region.depth(),
            Region::Union(rs) | Region::Intersection(rs) => 1 + rs.iter().map(Region::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Checks dimensions, parameters and nesting depth.
    pub fn validate(&self, d: usize) -> Result<()> {
        check_dim(d)?;
        if self.depth() > MAX_DEPTH {
            return Err(Error::InvalidRegion(format!("nesting depth exceeds {MAX_DEPTH}")));
        }
        self.validate_inner(d)
    }

    fn validate_inner(&self, d: usize) -> Result<()> {
        match self {
            Region::Empty | Region::Whole => Ok(()),
            Region::Ball { center, radius } => {
                check_len(center, d)?;
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidRegion("ball radius must be positive".into()));
                }
                Ok(())
            }
            Region::Cuboid { lo, hi } => {
                check_len(lo, d)?;
                check_len(hi, d)?;
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::InvalidRegion("box needs lo < hi componentwise".into()));
                }
                Ok(())
            }
            Region::HalfSpace { normal, offset } => {
                check_len(normal, d)?;
                if norm(normal) == 0.0 || !offset.is_finite() {
                    return Err(Error::InvalidRegion("half-space normal is zero".into()));
                }
                Ok(())
            }
            Region::Sector(a) => a.validate(d),
            Region::RadialShells(p) => p.validate(),
            Region::Shift { region, by } => {
                check_len(by, d)?;
                region.validate_inner(d)
            }
            Region::Complement(r) => r.validate_inner(d),
            Region::Union(rs) | Region::Intersection(rs) => rs.iter().try_for_each(|r| r.validate_inner(d)),
        }
    }

    /// Exact membership; assumes a validated region and matching `x`.
    pub fn inside(&self, x: &[f64]) -> bool {
        match self {
            Region::Empty => false,
            Region::Whole => true,
            Region::Ball { center, radius } => {
                x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
            }
            Region::Cuboid { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= *a && *v < *b),
            Region::HalfSpace { normal, offset } => dot(x, normal) > *offset,
            Region::Sector(a) => a.contains_dir(x),
            Region::RadialShells(p) => {
                let r = norm(x);
                r > 0.0 && p.contains_log(r.ln())
            }
            Region::Shift { region, by } => {
                let mut y = [0.0; 3];
                for i in 0..x.len() {
                    y[i] = x[i] - by[i];
                }
                region.inside(&y[..x.len()])
            }
            Region::Complement(r) => !r.inside(x),
            Region::Union(rs) => rs.iter().any(|r| r.inside(x)),
            Region::Intersection(rs) => rs.iter().all(|r| r.inside(x)),
        }
    }

    /// Checked membership.
    pub fn contains(&self, x: &[f64], d: usize) -> Result<bool> {
        check_len(x, d)?;
        self.validate(d)?;
        Ok(self.inside(x))
    }

    /// Membership of the point `e^{log_r} · dir` for `log_r` beyond
    /// [`FAR_LOG_RADIUS`], where finite offsets no longer matter.
    pub fn inside_far(&self, dir: &[f64], log_r: f64) -> bool {
        match self {
            Region::Empty | Region::Ball { .. } | Region::Cuboid { .. } => false,
            Region::Whole => true,
            Region::HalfSpace { normal, offset } => {
                let dn = dot(dir, normal);
                if dn == 0.0 {
                    *offset < 0.0
                } else {
                    dn > 0.0
                }
            }
            Region::Sector(a) => a.contains_dir(dir),
            Region::RadialShells(p) => p.contains_log(log_r),
            Region::Shift { region, .. } => region.inside_far(dir, log_r),
            Region::Complement(r) => !r.inside_far(dir, log_r),
            Region::Union(rs) => rs.iter().any(|r| r.inside_far(dir, log_r)),
            Region::Intersection(rs) => rs.iter().all(|r| r.inside_far(dir, log_r)),
        }
    }

    /// Membership of `c + r u` with `r = e^t`, switching to the far-field
    /// test when `t` is large.
    pub fn inside_on_ray(&self, c: &[f64], u: &[f64], t: f64) -> bool {
        if t > FAR_LOG_RADIUS + norm(c).ln_1p() {
            self.inside_far(u, t)
        } else {
            let r = t.exp();
            let mut y = [0.0; 3];
            for i in 0..c.len() {
                y[i] = c[i] + r * u[i];
            }
            self.inside(&y[..c.len()])
        }
    }

    /// `sup |x|` over the region, if bounded.
    pub fn bounding_radius(&self) -> Option<f64> {
        match self {
            Region::Empty => Some(0.0),
            Region::Ball { center, radius } => Some(norm(center) + radius),
            Region::Cuboid { lo, hi } => {
                Some(lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt())
            }
            Region::Shift { region, by } => region.bounding_radius().map(|r| r + norm(by)),
            Region::Union(rs) => rs.iter().map(Region::bounding_radius).try_fold(0.0f64, |m, r| r.map(|r| m.max(r))),
            Region::Intersection(rs) => rs.iter().filter_map(Region::bounding_radius).reduce(f64::min),
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bounding_radius().is_some()
    }

    /// A ball containing the region: tight for balls, boxes and shifts.
    pub fn bounding_ball(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            Region::Ball { center, radius } => Some((center.clone(), *radius)),
            Region::Cuboid { lo, hi } => {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let r = 0.5 * lo.iter().zip(hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
                Some((c, r))
            }
            Region::Shift { region, by } => region
                .bounding_ball()
                .map(|(c, r)| (c.iter().zip(by).map(|(a, b)| a + b).collect(), r)),
            Region::Intersection(rs) => rs
                .iter()
                .filter_map(Region::bounding_ball)
                .min_by(|a, b| a.1.total_cmp(&b.1)),
            _ => {
                let r = self.bounding_radius()?;
                Some((vec![0.0; self.dim_hint().unwrap_or(1)], r.max(1e-300)))
            }
        }
    }

    fn dim_hint(&self) -> Option<usize> {
        match self {
            Region::Ball { center, .. } => Some(center.len()),
            Region::Cuboid { lo, .. } => Some(lo.len()),
            Region::HalfSpace { normal, .. } => Some(normal.len()),
            Region::Sector(AngularSet::Arcs(_)) => Some(2),
            Region::Sector(AngularSet::Caps(_)) => Some(3),
            Region::Sector(AngularSet::Signs(_)) => Some(1),
            Region::Sector(AngularSet::Hemisphere(n)) => Some(n.len()),
            Region::Shift { by, .. } => Some(by.len()),
            Region::Complement(r) => r.dim_hint(),
            Region::Union(rs) | Region::Intersection(rs) => rs.iter().find_map(Region::dim_hint),
            _ => None,
        }
    }

    /// Diameter bound `2 · radius` of the bounding ball.
    pub fn diameter(&self) -> Option<f64> {
        self.bounding_ball().map(|(_, r)| 2.0 * r)
    }

    /// Lower bound on the distance from `x` to the boundary, valid whether
    /// or not `x` is inside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Region::Empty | Region::Whole => f64::INFINITY,
            Region::Ball { center, radius } => {
                let r: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (r - radius).abs()
            }
            Region::Cuboid { lo, hi } => {
                if self.inside(x) {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| (v - a).min(b - v))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    x.iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(v, (a, b))| (a - v).max(0.0).max(v - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            }
            Region::HalfSpace { normal, offset } => (dot(x, normal) - offset).abs() / norm(normal),
            Region::Sector(a) => a.cone_distance(x),
            Region::RadialShells(p) => {
                let r = norm(x);
                let t = r.ln();
                match p.index(t) {
                    None => p.log_radius(0).exp() - r,
                    Some(j) => (r - p.log_radius(j).exp()).min(p.log_radius(j + 1).exp() - r),
                }
            }
            Region::Shift { region, by } => {
                let y: Vec<f64> = x.iter().zip(by).map(|(a, b)| a - b).collect();
                region.boundary_distance(&y)
            }
            Region::Complement(r) => r.boundary_distance(x),
            Region::Union(rs) | Region::Intersection(rs) => {
                rs.iter().map(|r| r.boundary_distance(x)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Distance from an interior point to the boundary: exact for
    /// primitives, a lower bound for composites.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        let d = x.len();
        self.validate(d)?;
        if !self.inside(x) {
            return Err(Error::PointOutside);
        }
        Ok(self.boundary_distance(x))
    }

    /// Planar directions (angles in `[0, 2π)`) from `c` along which the
    /// boundary passes through `c` itself. A polar cubature centred at `c`
    /// jumps there. Empty outside `d = 2`.
    pub fn apex_angles(&self, c: &[f64], out: &mut Vec<f64>) {
        if c.len() != 2 {
            return;
        }
        let eps = 1e-12 * (1.0 + norm(c));
        let line = |n: [f64; 2], out: &mut Vec<f64>| {
            let phi = n[1].atan2(n[0]);
            out.push((phi + PI / 2.0).rem_euclid(TAU));
            out.push((phi - PI / 2.0).rem_euclid(TAU));
        };
        match self {
            Region::Empty | Region::Whole | Region::RadialShells(_) => {}
            Region::Ball { center, radius } => {
                let v = [c[0] - center[0], c[1] - center[1]];
                if (norm(&v) - radius).abs() <= eps * (1.0 + radius) {
                    line(v, out);
                }
            }
            Region::Cuboid { lo, hi } => {
                for i in 0..2 {
                    let j = 1 - i;
                    let on_face = (c[i] - lo[i]).abs() <= eps || (c[i] - hi[i]).abs() <= eps;
                    if on_face && c[j] >= lo[j] - eps && c[j] <= hi[j] + eps {
                        let mut n = [0.0; 2];
                        n[i] = 1.0;
                        line(n, out);
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                if (dot(normal, c) - offset).abs() <= eps * norm(normal) {
                    line([normal[0], normal[1]], out);
                }
            }
            Region::Sector(a) => {
                if norm(c) <= eps {
                    out.extend(a.angular_breaks());
                }
            }
            Region::Shift { region, by } => region.apex_angles(&[c[0] - by[0], c[1] - by[1]], out),
            Region::Complement(r) => r.apex_angles(c, out),
            Region::Union(v) | Region::Intersection(v) => v.iter().for_each(|r| r.apex_angles(c, out)),
        }
    }

    /// Pushes `ln r` for every `r > 0` at which the ray `c + r u` may cross
    /// the boundary, restricted to `t_lo < ln r < t_hi`. Spurious extra
    /// points are allowed; missing a crossing is not.
    pub fn ray_breaks(&self, c: &[f64], u: &[f64], t_lo: f64, t_hi: f64, out: &mut Vec<f64>) {
        let mut roots = Vec::new();
        match self {
            Region::Empty | Region::Whole => {}
            Region::Ball { center, radius } => {
                let w: Vec<f64> = c.iter().zip(center).map(|(a, b)| a - b).collect();
                push_quadratic_roots(1.0, 2.0 * dot(&w, u), dot(&w, &w) - radius * radius, &mut roots);
            }
            Region::Cuboid { lo, hi } => {
                for i in 0..c.len() {
                    if u[i] != 0.0 {
                        roots.push((lo[i] - c[i]) / u[i]);
                        roots.push((hi[i] - c[i]) / u[i]);
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                let un = dot(u, normal);
                if un != 0.0 {
                    roots.push((offset - dot(c, normal)) / un);
                }
            }
            Region::Sector(a) => a.ray_roots(c, u, &mut roots),
            Region::RadialShells(p) => {
                let b = dot(c, u);
                let cc = dot(c, c);
                let shift = cc.sqrt().ln_1p();
                let mut j = 0u64;
                // skip shells wholly below the window
                if let Some(start) = p.index(t_lo - shift - 1.0) {
                    j = start;
                }
                loop {
                    let l = p.log_radius(j);
                    if l > t_hi + shift + 1.0 {
                        break;
                    }
                    if l > FAR_LOG_RADIUS + shift {
                        if l > t_lo && l < t_hi {
                            out.push(l);
                        }
                    } else {
                        let rho = l.exp();
                        let disc = b * b - cc + rho * rho;
                        if disc >= 0.0 {
                            roots.push(-b + disc.sqrt());
                            roots.push(-b - disc.sqrt());
                        }
                    }
                    j += 1;
                }
            }
            Region::Shift { region, by } => {
                let y: Vec<f64> = c.iter().zip(by).map(|(a, b)| a - b).collect();
                region.ray_breaks(&y, u, t_lo, t_hi, out);
            }
            Region::Complement(r) => r.ray_breaks(c, u, t_lo, t_hi, out),
            Region::Union(rs) | Region::Intersection(rs) => {
                for r in rs {
                    r.ray_breaks(c, u, t_lo, t_hi, out);
                }
            }
        }
        for r in roots {
            if r > 0.0 && r.is_finite() {
                let t = r.ln();
                if t > t_lo && t < t_hi {
                    out.push(t);
                }
            }
        }
    }

    /// Lebesgue measure. Exact for balls, boxes, and balls cut by a
    /// hyperplane through their center; Monte Carlo otherwise.
    pub fn volume(&self, d: usize) -> Result<EstimateWithError> {
        self.volume_with(d, &QuadratureSpec::default())
    }

    pub fn volume_with(&self, d: usize, spec: &QuadratureSpec) -> Result<EstimateWithError> {
        self.validate(d)?;
        if let Some(v) = self.analytic_volume(d) {
            return Ok(EstimateWithError::exact(v));
        }
        let (c, rad) = self.bounding_ball().ok_or(Error::Unbounded)?;
        let cube = unit_ball_volume(d) * rad.powi(d as i32);
        let [est] = quad::run_batches::<1, _>(spec, |rng| {
            let mut x = [0.0; 3];
            uniform_in_ball(rng, &c, rad, &mut x[..d]);
            Some([if self.inside(&x[..d]) { cube } else { 0.0 }])
        })?;
        Ok(est)
    }

    /// Like [`Region::volume`] for an unbounded region clipped by `clip`.
    pub fn volume_within(&self, clip: &Region, d: usize) -> Result<EstimateWithError> {
        Region::Intersection(vec![self.clone(), clip.clone()]).volume(d)
    }

    fn analytic_volume(&self, d: usize) -> Option<f64> {
        match self {
            Region::Empty => Some(0.0),
            Region::Ball { radius, .. } => Some(unit_ball_volume(d) * radius.powi(d as i32)),
            Region::Cuboid { lo, hi } => Some(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
            Region::Shift { region, .. } => region.analytic_volume(d),
            Region::Intersection(rs) if rs.len() == 2 => {
                let (ball, half) = match (&rs[0], &rs[1]) {
                    (b @ Region::Ball { .. }, h @ Region::HalfSpace { .. }) => (b, h),
                    (h @ Region::HalfSpace { .. }, b @ Region::Ball { .. }) => (b, h),
                    _ => return None,
                };
                if let (Region::Ball { center, radius }, Region::HalfSpace { normal, offset }) = (ball, half) {
                    let gap = (dot(center, normal) - offset).abs() / norm(normal);
                    if gap <= 1e-14 * radius {
                        return Some(0.5 * unit_ball_volume(d) * radius.powi(d as i32));
                    }
                }
                None
            }
            _ => None,
        }
    }
}

/// Uniform point in the ball `B(c, r)`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, c: &[f64], r: f64, out: &mut [f64]) {
    let d = out.len();
    quad::random_direction(rng, out);
    let rho = r * rng.gen::<f64>().powf(1.0 / d as f64);
    for i in 0..d {
        out[i] = c[i] + rho * out[i];
    }
}

/// Deterministic cubature of `g` over a bounded region.
///
/// Integrates in polar coordinates about the centre of the bounding ball.
/// Along each ray the integrand is split at the region's boundary
/// crossings and at the points reported by `breaks`, so piecewise smooth
/// integrands (indicators included) converge quickly.
///
/// In the plane `angles(c, out)` adds directions from the centre `c` along
/// which the integrand jumps; the region's own are found automatically.
pub fn integrate_over<G, B, A>(
    region: &Region,
    d: usize,
    g: G,
    breaks: B,
    angles: A,
    rel_tol: f64,
) -> Result<EstimateWithError>
where
    G: Fn(&[f64]) -> f64,
    B: Fn(&[f64], &[f64], f64, f64, &mut Vec<f64>),
    A: Fn(&[f64], &mut Vec<f64>),
{
    region.validate(d)?;
    let (c, rho) = region.bounding_ball().ok_or(Error::Unbounded)?;
    let scale = unit_ball_volume(d) * rho.powi(d as i32);
    let abs_tol = rel_tol * scale * 1e-2;
    let ray = |u: &[f64], tol: f64| -> (f64, f64) {
        let (origin, span) = if d == 1 { (vec![c[0] - rho], 2.0 * rho) } else { (c.clone(), rho) };
        let mut ts = Vec::new();
        region.ray_breaks(&origin, u, f64::NEG_INFINITY, span.ln(), &mut ts);
        breaks(&origin, u, f64::NEG_INFINITY, span.ln(), &mut ts);
        let mut rs: Vec<f64> = ts.iter().map(|t| t.exp()).filter(|r| *r > 0.0 && *r < span).collect();
        rs.push(0.0);
        rs.push(span);
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        let mut y = [0.0; 3];
        let mut total = 0.0;
        let mut err = 0.0;
        for w in rs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            for i in 0..d {
                y[i] = origin[i] + mid * u[i];
            }
            if !region.inside(&y[..d]) {
                continue;
            }
            let r = quad::adaptive(
                |r| {
                    let mut z = [0.0; 3];
                    for i in 0..d {
                        z[i] = origin[i] + r * u[i];
                    }
                    g(&z[..d]) * if d == 1 { 1.0 } else { r.powi(d as i32 - 1) }
                },
                w[0],
                w[1],
                Tol { abs: tol / rs.len() as f64, rel: rel_tol * 1e-2, max_intervals: 200 },
            );
            total += r.value;
            err += r.error;
        }
        (total, err)
    };
    let est = match d {
        1 => {
            let (v, e) = ray(&[1.0], abs_tol);
            EstimateWithError::analytic(v, e)
        }
        2 => {
            let inner_err = std::cell::Cell::new(0.0f64);
            let mut cuts = vec![0.0, TAU];
            region.apex_angles(&c, &mut cuts);
            angles(&c, &mut cuts);
            for a in cuts.iter_mut() {
                *a = a.rem_euclid(TAU);
            }
            cuts.push(TAU);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let r = quad::adaptive_pieces(
                |th| {
                    let (v, e) = ray(&[th.cos(), th.sin()], abs_tol / 10.0);
                    inner_err.set(inner_err.get().max(e));
                    v
                },
                &cuts,
                Tol { abs: abs_tol, rel: rel_tol, max_intervals: 400 },
            );
            EstimateWithError::analytic(r.value, r.error + TAU * inner_err.get())
        }
        _ => {
            let inner_err = std::cell::Cell::new(0.0f64);
            let r = quad::adaptive(
                |z| {
                    let q = (1.0 - z * z).max(0.0).sqrt();
                    quad::adaptive(
                        |th| {
                            let (v, e) = ray(&[q * th.cos(), q * th.sin(), z], abs_tol / 100.0);
                            inner_err.set(inner_err.get().max(e));
                            v
                        },
                        0.0,
                        TAU,
                        Tol { abs: abs_tol / 10.0, rel: rel_tol, max_intervals: 100 },
                    )
                    .value
                },
                -1.0,
                1.0,
                Tol { abs: abs_tol, rel: rel_tol, max_intervals: 100 },
            );
            EstimateWithError::analytic(r.value, r.error + 2.0 * TAU * inner_err.get())
        }
    };
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert!(Region::unit_ball(2).contains(&[0.5, 0.0], 2).unwrap());
        assert!(!Region::half_space(vec![1.0, 0.0], 0.0).contains(&[-1.0, 0.0], 2).unwrap());
        assert!(Region::unit_ball(2).complement().contains(&[2.0, 0.0], 2).unwrap());
        assert!(Region::unit_ball(2).contains(&[0.5], 2).is_err());
    }

    #[test]
    fn sphere_constants() {
        assert_eq!(sphere_measure(1).value, 2.0);
        assert!((sphere_measure(2).value - TAU).abs() < 1e-15);
        assert!((sphere_measure(3).value - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn analytic_volumes() {
        let v = Region::unit_ball(2).volume(2).unwrap();
        assert_eq!(v.error_kind, quad::ErrorKind::Exact);
        assert!((v.value - PI).abs() < 1e-15);
        let half = Region::Intersection(vec![Region::half_space(vec![1.0, 0.0], 0.0), Region::unit_ball(2)]);
        assert!((half.volume(2).unwrap().value - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn thin_sector_in_a_box_is_exact() {
        // the cubature centre sits on the apex, so the edges are jumps in angle
        let (w, h, a) = (1.4256263375045493, 1.4284950178202833, 0.21182922691236752f64);
        let e = Region::Sector(AngularSet::Arcs(vec![[0.0, a]]));
        let omega = Region::Cuboid { lo: vec![-w, -h], hi: vec![w, h] };
        let v = integrate_over(
            &omega,
            2,
            |x| if e.inside(x) { 1.0 } else { 0.0 },
            |c, u, lo, hi, o| e.ray_breaks(c, u, lo, hi, o),
            |c, o| e.apex_angles(c, o),
            1e-11,
        )
        .unwrap();
        let exact = 0.5 * w * w * a.tan();
        assert!((v.value - exact).abs() < 1e-12 * exact, "{} vs {exact}", v.value);
    }

    #[test]
    fn sector_volume_is_statistical() {
        let r = Region::Intersection(vec![Region::sector2(0.0, PI / 3.0), Region::unit_ball(2)]);
        let v = r.volume(2).unwrap();
        assert_eq!(v.error_kind, quad::ErrorKind::Statistical);
        assert!((v.value - PI / 6.0).abs() < 4.0 * v.error + 1e-3, "{v:?}");
    }

    #[test]
    fn unbounded_volume_rejected() {
        assert_eq!(Region::half_space(vec![1.0], 0.0).volume(1), Err(Error::Unbounded));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(Region::unit_ball(2).distance_to_boundary(&[0.0, 0.0]).unwrap(), 1.0);
        let b = Region::Cuboid { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        assert_eq!(b.distance_to_boundary(&[0.5, 0.0]).unwrap(), 0.5);
        let i = Region::Intersection(vec![Region::unit_ball(2), Region::half_space(vec![1.0, 0.0], -0.5)]);
        assert_eq!(i.distance_to_boundary(&[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(Region::unit_ball(2).distance_to_boundary(&[3.0, 0.0]), Err(Error::PointOutside));
    }

    #[test]
    fn depth_cap() {
        let mut r = Region::unit_ball(1);
        for _ in 0..9 {
            r = r.complement();
        }
        assert!(r.validate(1).is_err());
    }

    #[test]
    fn tower_shells_membership() {
        let p = ShellPattern::default();
        // shells [2,4), [16,256), [65536, 2^32)
        for (r, inside) in [(3.0, true), (5.0, false), (100.0, true), (300.0, false), (7e4, true)] {
            assert_eq!(p.contains_log(f64::ln(r)), inside, "r = {r}");
        }
    }

    #[test]
    fn geometric_shells_membership() {
        let p = ShellPattern::Geometric { start: 1.0, ratio: 2.0 };
        for (r, inside) in [(1.5, true), (3.0, false), (5.0, true), (9.0, false), (0.5, false)] {
            assert_eq!(p.contains_log(f64::ln(r)), inside, "r = {r}");
        }
    }

    #[test]
    fn arc_wraparound() {
        let s = AngularSet::Arcs(vec![[-0.5, 0.5]]);
        assert!(s.contains_dir(&[1.0, 0.1]));
        assert!(s.contains_dir(&[1.0, -0.1]));
        assert!(!s.contains_dir(&[-1.0, 0.0]));
        assert!((s.measure(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cubature_of_sector_in_disk() {
        let omega = Region::unit_ball(2);
        let e = Region::sector2(0.3, PI / 3.0);
        let v = integrate_over(&omega, 2, |x| if e.inside(x) { 1.0 } else { 0.0 }, |c, u, a, b, o| e.ray_breaks(c, u, a, b, o), |c, o| e.apex_angles(c, o), 1e-10)
            .unwrap();
        assert!((v.value - PI / 6.0).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn cubature_polynomial_interval() {
        let omega = Region::interval(-1.0, 1.0);
        let v = integrate_over(&omega, 1, |x| (x[0] + 1.0).powi(2), |_, _, _, _, _| {}, |_, _| {}, 1e-12).unwrap();
        assert!((v.value - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cubature_ball_3d() {
        let v = integrate_over(&Region::unit_ball(3), 3, |_| 1.0, |_, _, _, _, _| {}, |_, _| {}, 1e-8).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn serde_roundtrip_tagged() {
        let r: Region = serde_json::from_str(r#"{"ball":{"center":[0,0],"radius":1}}"#).unwrap();
        assert_eq!(r, Region::unit_ball(2));
        assert!(serde_json::from_str::<Region>(r#"{"ball":{"center":[0,0],"radius":1,"x":2}}"#).is_err());
    }
}
