//! The end-to-end acceptance checks. Each criterion runs a full computation
//! against an independent target and reports one line.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::asymptotics::{geometric_grid, sweep, SSweepResult};
use crate::fields::{AngularFunction, RadialProfile, ScalarField, Term};
use crate::gausskernel::{closed_form_limit, dominated_limit, GaussPerimeterSeries};
use crate::geometry::{sphere_measure, AngularSet, Cap, Region, ShellPattern};
use crate::limits::{binomial_sum, f0_even_p, f0_main, interaction_energy, perimeter_limit};
use crate::mass::{alpha_numeric, alpha_of_one, alpha_translated};
use crate::quad::{self, QuadratureSpec};
use crate::seminorm::{default_radius, gagliardo_qomega, hardy_pair, interior_interior};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceOptions {
    /// Monte Carlo samples per evaluation.
    pub samples: u64,
    pub seed: u64,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self { samples: 2_000_000, seed: QuadratureSpec::default().rng_seed }
    }
}

impl AcceptanceOptions {
    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::default().with_budget(self.samples).with_seed(self.seed)
    }
}

pub const CRITERIA: [(u8, &str); 14] = [
    (1, "mass constants"),
    (2, "sector mass"),
    (3, "periodic tail"),
    (4, "compact support limit"),
    (5, "non-decaying tail limit"),
    (6, "sector perimeter"),
    (7, "bounded-set perimeter"),
    (8, "critical case"),
    (9, "odd exponent"),
    (10, "interaction energy"),
    (11, "Hardy inequality"),
    (12, "Gaussian perimeter"),
    (13, "translation invariance"),
    (14, "interior vanishing"),
];

/// Runs one criterion; errors are reported as failures.
pub fn run_criterion(id: u8, opts: &AcceptanceOptions) -> CriterionOutcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown criterion");
    let start = Instant::now();
    let spec = opts.spec();
    let result = match id {
        1 => mass_constants(),
        2 => sector_mass(),
        3 => periodic_tail(),
        4 => compact_support(&spec),
        5 => non_decaying(&spec),
        6 => sector_perimeter(&spec),
        7 => ball_perimeter(&spec),
        8 => critical_case(&spec),
        9 => odd_exponent(&spec),
        10 => interaction_equivalence(),
        11 => hardy(&spec),
        12 => gaussian(&spec),
        13 => translation(),
        14 => interior_vanishing(&spec),
        _ => Ok((false, format!("no criterion with id {id}"))),
    };
    let (passed, summary) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome { id, title, passed, summary, seconds: start.elapsed().as_secs_f64() }
}

/// Runs the listed criteria (all of them when `ids` is empty) in order.
pub fn run_selected(ids: &[u8], opts: &AcceptanceOptions) -> Vec<CriterionOutcome> {
    let all: Vec<u8> = CRITERIA.iter().map(|c| c.0).collect();
    let ids = if ids.is_empty() { &all[..] } else { ids };
    ids.iter().map(|&id| run_criterion(id, opts)).collect()
}

/// The field equal to `x + 1` on `(−1, 1)` and to `1` elsewhere.
pub fn example_v() -> ScalarField {
    ScalarField::Sum(vec![
        ScalarField::Constant(1.0),
        ScalarField::Product(vec![ScalarField::affine(&[1.0], 0.0), ScalarField::indicator(Region::interval(-1.0, 1.0))]),
    ])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn seminorm_grid() -> Vec<f64> {
    geometric_grid(1e-2, 1e-4, 5)
}

/// Sweep of `scale(s)·[f]^p_{W^{s,p}(Q_Ω)}` over the seminorm grid.
fn seminorm_sweep(
    f: &ScalarField,
    omega: &Region,
    d: usize,
    p: u32,
    scale: impl Fn(f64) -> f64 + Sync,
    spec: &QuadratureSpec,
) -> Result<SSweepResult> {
    let radius = default_radius(f, omega)?;
    sweep(|s| Ok(gagliardo_qomega(f, omega, d, s, p, radius, spec)?.total.scale(scale(s))), &seminorm_grid())
}

fn mass_constants() -> Result<(bool, String)> {
    let spec = QuadratureSpec::default();
    let grid = geometric_grid(1e-2, 1e-4, 5);
    let mut worst = 0.0f64;
    for d in 1..=3 {
        for p in 1..=2 {
            let r = alpha_numeric(&ScalarField::Constant(1.0), p, d, &grid, 1.0, &spec)?;
            worst = worst.max(rel(r.limit, alpha_of_one(p, d)));
        }
    }
    Ok((worst < 1e-3, format!("worst relative deviation from dω_d/p over 6 cases {worst:.2e} (tol 1e-3)")))
}

fn sector_mass() -> Result<(bool, String)> {
    let spec = QuadratureSpec::default();
    let grid = geometric_grid(1e-2, 1e-4, 5);
    let mut parts = Vec::new();
    let mut ok = true;
    for theta in [PI / 6.0, PI / 2.0, PI] {
        let f = ScalarField::indicator(Region::sector2(0.3, theta));
        let r = alpha_numeric(&f, 1, 2, &grid, 1.0, &spec)?;
        let dev = rel(r.limit, theta);
        ok &= dev < 1e-3;
        parts.push(format!("θ₀={theta:.4}: {:.6} (rel {dev:.1e})", r.limit));
    }
    Ok((ok, parts.join(", ")))
}

fn stripes() -> ScalarField {
    ScalarField::Periodic1D { steps: vec![[0.0, 1.0], [0.5, 0.0]], period: 1.0 }
}

/// `s·Σ_k ∫ r^{−1−2s}` over every stripe up to `n` periods, plus the
/// averaged remainder.
fn stripes_direct_sum(s: f64, n: u64) -> f64 {
    let e = 2.0 * s;
    let mut total = 0.0;
    for k in 1..n {
        let k = k as f64;
        total += quad::power_integral(k, k + 0.5, -1.0 - e);
        total += quad::power_integral((k - 0.5).max(1.0), k, -1.0 - e);
    }
    total += (n as f64).powf(-e) / e;
    s * total
}

fn periodic_tail() -> Result<(bool, String)> {
    let spec = QuadratureSpec::default();
    let f = stripes();
    let grid = geometric_grid(1e-2, 1e-4, 5);
    let r = alpha_numeric(&f, 2, 1, &grid, 1.0, &spec)?;
    let at = alpha_translated(&f, 2, 1, &[0.0], 1.0, 1e-4, &spec)?.value;
    let oracle = stripes_direct_sum(1e-4, 2_000_000);
    let ok = rel(r.limit, 0.5) < 1e-2 && rel(at, oracle) < 1e-2;
    Ok((
        ok,
        format!(
            "extrapolated α₂ {:.6} vs ½ (rel {:.1e}); at s=1e-4 {at:.6} vs direct sum {oracle:.6} (rel {:.1e})",
            r.limit,
            rel(r.limit, 0.5),
            rel(at, oracle)
        ),
    ))
}

fn compact_support(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let f = ScalarField::bump(2);
    let omega = Region::unit_ball(2);
    let r = seminorm_sweep(&f, &omega, 2, 2, |s| s / 2.0, spec)?;
    // (dω/2)·‖(1−|x|²)²‖²_{L²(B₁)} = π·π/5
    let target = PI * PI / 5.0;
    let dev = rel(r.limit, target);
    Ok((dev < 0.03, format!("(s/2)[u]² → {:.5} ± {:.5} vs π²/5 = {target:.5} (rel {dev:.1e})", r.limit, r.limit_error)))
}

fn non_decaying(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let v = example_v();
    let omega = Region::interval(-1.0, 1.0);
    let r = seminorm_sweep(&v, &omega, 1, 2, |s| s / 2.0, spec)?;
    let f0 = f0_main(&v, &omega, 1)?;
    let dev = rel(r.limit, f0);
    let p = 2.0;
    let matches = if rel(r.limit, 4.0 / (p * (p + 1.0))) < 0.03 {
        "4/(p(p+1))"
    } else if rel(r.limit, 2.0 / (p * (p + 1.0))) < 0.03 {
        "2/(p(p+1))"
    } else {
        "neither printed constant"
    };
    Ok((
        dev < 0.03,
        format!("(s/2)[v]² → {:.5} ± {:.1e} vs F0 = {f0:.5} (rel {dev:.1e}); matches {matches}", r.limit, r.limit_error),
    ))
}

/// `(s/2)·Per_s` is compared with the halved closed form; `s·Per_s` is
/// reported next to the unhalved one.
fn perimeter_check(e: Region, omega: Region, spec: &QuadratureSpec) -> Result<(bool, String)> {
    let f = ScalarField::Indicator(e.clone());
    // Per_s = ½[χ_E]_{W^{s,1}}
    let r = seminorm_sweep(&f, &omega, 2, 1, |s| s / 4.0, spec)?;
    let target = perimeter_limit(&e, &omega, 2)?;
    let dev = rel(r.limit, target);
    Ok((
        dev < 0.05 && !r.no_clean_limit,
        format!(
            "(s/2)·Per_s → {:.5} ± {:.1e} vs {target:.5} (rel {dev:.1e}); s·Per_s → {:.5} vs unhalved {:.5}",
            r.limit,
            r.limit_error,
            2.0 * r.limit,
            2.0 * target
        ),
    ))
}

fn sector_perimeter(spec: &QuadratureSpec) -> Result<(bool, String)> {
    perimeter_check(Region::sector2(0.0, PI / 2.0), Region::unit_ball(2), spec)
}

fn ball_perimeter(spec: &QuadratureSpec) -> Result<(bool, String)> {
    perimeter_check(Region::ball(vec![0.0, 0.0], 0.5), Region::unit_ball(2), spec)
}

fn half_plane() -> Region {
    Region::half_space(vec![1.0, 0.0], 0.0)
}

/// Half plane inside the unit disk, tower shells outside it.
pub fn half_plane_with_shells() -> Region {
    Region::Union(vec![
        Region::Intersection(vec![half_plane(), Region::unit_ball(2)]),
        Region::Intersection(vec![
            Region::complement(Region::unit_ball(2)),
            Region::RadialShells(ShellPattern::default()),
        ]),
    ])
}

fn critical_case(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let omega = Region::unit_ball(2);
    let target = PI * PI / 2.0;
    let a = seminorm_sweep(&ScalarField::Indicator(half_plane()), &omega, 2, 2, |s| s / 2.0, spec)?;
    let b = seminorm_sweep(&ScalarField::Indicator(half_plane_with_shells()), &omega, 2, 2, |s| s / 2.0, spec)?;
    let ok = rel(a.limit, target) < 0.05 && rel(b.limit, target) < 0.05 && !b.no_clean_limit;
    Ok((
        ok,
        format!(
            "half plane {:.5}, shells exterior {:.5} (residual {:.2}) vs π²/2 = {target:.5}",
            a.limit, b.limit, b.residual
        ),
    ))
}

fn odd_exponent(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let v = example_v();
    let omega = Region::interval(-1.0, 1.0);
    let r3 = seminorm_sweep(&v, &omega, 1, 3, |s| s / 2.0, spec)?;
    let alt = binomial_sum(&v, &omega, 3, 1)?;
    let gap = (r3.limit - alt).abs();
    let odd_ok = gap > 10.0 * r3.limit_error;
    let disk = Region::unit_ball(2);
    let chi = ScalarField::Indicator(half_plane());
    let r4 = seminorm_sweep(&chi, &disk, 2, 4, |s| s / 2.0, spec)?;
    let f4 = f0_even_p(&chi, &disk, 4, 2)?;
    let even_ok = rel(r4.limit, f4) < 0.05;
    Ok((
        odd_ok && even_ok,
        format!(
            "p=3: limit {:.5} ± {:.1e} vs alternating sum {alt:.2e} (gap/err {:.0}); p=4 indicator: {:.5} vs {f4:.5}",
            r3.limit,
            r3.limit_error,
            gap / r3.limit_error.max(1e-300),
            r4.limit
        ),
    ))
}

/// Fields with an angular limit at infinity, with their dimension.
fn angular_limit_fields() -> Vec<(ScalarField, Region, usize)> {
    let disk = Region::unit_ball(2);
    let sector = |a: f64, w: f64| ScalarField::indicator(Region::sector2(a, w));
    vec![
        (example_v(), Region::interval(-1.0, 1.0), 1),
        (ScalarField::indicator(Region::half_space(vec![1.0], 0.2)), Region::interval(-1.0, 1.0), 1),
        (ScalarField::Indicator(half_plane()), disk.clone(), 2),
        (sector(0.0, PI / 2.0), disk.clone(), 2),
        (sector(1.0, 2.0), Region::ball(vec![0.2, -0.1], 0.7), 2),
        (ScalarField::indicator(Region::half_space(vec![0.6, 0.8], 0.3)), disk.clone(), 2),
        (
            ScalarField::RadialAngular {
                profile: RadialProfile::Saturating { scale: 0.5 },
                angular: AngularFunction::Linear(vec![1.0, 0.0]),
            },
            disk.clone(),
            2,
        ),
        (ScalarField::Sum(vec![ScalarField::Constant(2.0), ScalarField::bump(2)]), disk.clone(), 2),
        (
            ScalarField::Sum(vec![sector(0.5, 1.5), ScalarField::bump(2).scaled(0.5)]),
            Region::Cuboid { lo: vec![-0.5, -0.5], hi: vec![0.5, 0.5] },
            2,
        ),
        (
            ScalarField::indicator(Region::Sector(AngularSet::Caps(vec![Cap { axis: vec![0.0, 0.0, 1.0], half_angle: 0.7 }]))),
            Region::unit_ball(3),
            3,
        ),
    ]
}

fn interaction_equivalence() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let fields = angular_limit_fields();
    for (f, omega, d) in &fields {
        let a = f0_main(f, omega, *d)?;
        let b = interaction_energy(f, omega, *d, 64)?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok((worst < 1e-6, format!("worst deviation over {} fields {worst:.1e} (tol 1e-6)", fields.len())))
}

fn hardy_fields() -> Vec<ScalarField> {
    vec![
        ScalarField::indicator(Region::ball(vec![0.0, 0.0], 0.5)),
        ScalarField::bump(2),
        ScalarField::RadialAngular { profile: RadialProfile::Bump { radius: 0.9 }, angular: AngularFunction::Constant(1.0) },
        ScalarField::indicator(Region::ball(vec![0.3, 0.2], 0.3)),
        ScalarField::indicator(Region::Cuboid { lo: vec![-0.5, -0.2], hi: vec![0.4, 0.6] }),
    ]
}

fn hardy(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let omega = Region::unit_ball(2);
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    let fields = hardy_fields();
    for f in &fields {
        for s in [0.003, 0.01, 0.03] {
            let (l, r) = hardy_pair(f, &omega, s, 0.5, 2, spec)?;
            let margin = (r.value - l.value) / (l.error + r.error).max(1e-300);
            min_margin = min_margin.min(margin);
            if r.value - l.value <= l.error + r.error {
                failures += 1;
            }
        }
    }
    Ok((
        failures == 0,
        format!("{failures} failures over {} cases; smallest margin {min_margin:.1} combined errors", 3 * fields.len()),
    ))
}

fn gaussian(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let e = Region::half_space(vec![1.0], 0.0);
    let omega = Region::interval(-1.0, 1.0);
    let series = GaussPerimeterSeries::new(&e, &omega, 1, spec)?;
    let r = sweep(|s| series.scaled(s), &geometric_grid(1e-2, 1e-4, 5))?;
    let closed = closed_form_limit(&e, &omega, 1)?.value;
    let dominated = dominated_limit(&e, &omega, 1, spec)?.value;
    let ok = rel(r.limit, 0.4496) < 0.02 && rel(r.limit, dominated) < 0.01;
    Ok((
        ok,
        format!(
            "s·P → {:.6} ± {:.1e}; closed form {closed:.6}; dominated-convergence value {dominated:.6}",
            r.limit, r.limit_error
        ),
    ))
}

/// Bounded fields with `sup|f| ≤ 1` and their dimension.
fn translation_fields() -> Vec<(ScalarField, usize)> {
    vec![
        (ScalarField::Constant(1.0), 2),
        (ScalarField::indicator(Region::sector2(0.2, 1.0)), 2),
        (ScalarField::indicator(half_plane()), 2),
        (
            ScalarField::RadialAngular {
                profile: RadialProfile::Saturating { scale: 0.3 },
                angular: AngularFunction::Indicator(AngularSet::Arcs(vec![[0.0, 2.0]])),
            },
            2,
        ),
        (stripes(), 1),
    ]
}

/// At each `s`, `|A_x(s) − A_0(s)|` must stay below the recentring bound
/// `2·dω·s(d+s)|x|(R−|x|)^{−1−s}(R/(R−|x|))^{d−1}` plus the numerical
/// errors.
fn translation() -> Result<(bool, String)> {
    let spec = QuadratureSpec::default();
    let radius = 4.0;
    let mut failures = 0;
    let mut pairs = 0;
    let mut worst = 0.0f64;
    for (f, d) in translation_fields() {
        let dw = sphere_measure(d).value;
        for k in 0..5 {
            let angle = 0.7 * k as f64;
            let len = 0.25 * (k + 1) as f64;
            let x: Vec<f64> = if d == 1 { vec![if k % 2 == 0 { len } else { -len }] } else { vec![len * angle.cos(), len * angle.sin()] };
            let xn = len;
            pairs += 1;
            for s in [1e-1, 1e-2, 1e-3] {
                let a0 = alpha_translated(&f, 1, d, &vec![0.0; d], radius, s, &spec)?;
                let ax = alpha_translated(&f, 1, d, &x, radius, s, &spec)?;
                let gap = radius - xn;
                let bound = 2.0 * dw * s * (d as f64 + s) * xn * gap.powf(-1.0 - s) * (radius / gap).powi(d as i32 - 1);
                let diff = (ax.value - a0.value).abs();
                worst = worst.max(diff / bound);
                if diff > bound + a0.error + ax.error {
                    failures += 1;
                }
            }
        }
    }
    Ok((failures == 0, format!("{failures} violations over {pairs} (field, offset) pairs × 3 orders; worst diff/bound {worst:.2}")))
}

/// Continuous fields with finite seminorm at `s₀ = ½`, `p = 2`.
fn smooth_fields() -> Vec<ScalarField> {
    let poly = |terms: &[(f64, [u32; 2])]| {
        ScalarField::Polynomial(terms.iter().map(|(c, e)| Term { coef: *c, exponents: e.to_vec() }).collect())
    };
    vec![
        ScalarField::RadialAngular { profile: RadialProfile::Bump { radius: 1.0 }, angular: AngularFunction::Constant(1.0) },
        ScalarField::RadialAngular { profile: RadialProfile::Bump { radius: 0.8 }, angular: AngularFunction::Linear(vec![0.0, 1.0]) },
        poly(&[(1.0, [2, 0])]),
        poly(&[(1.0, [1, 1]), (0.5, [0, 0])]),
        ScalarField::RadialAngular {
            profile: RadialProfile::Saturating { scale: 0.5 },
            angular: AngularFunction::Linear(vec![1.0, 0.0]),
        },
    ]
}

/// `II(s) ≤ diam^{2(s₀−s)} II(s₀)` at each `s`, and `s·II(s)` extrapolates
/// to zero.
fn interior_vanishing(spec: &QuadratureSpec) -> Result<(bool, String)> {
    let omega = Region::unit_ball(2);
    let diam: f64 = 2.0;
    let s0 = 0.5;
    let grid = geometric_grid(1e-1, 1e-3, 5);
    let mut failures = 0;
    let mut worst_limit = 0.0f64;
    let fields = smooth_fields();
    for f in &fields {
        let ii0 = interior_interior(f, &omega, 2, s0, 2, spec)?;
        let mut pts = Vec::new();
        for &s in &grid {
            let ii = interior_interior(f, &omega, 2, s, 2, spec)?;
            let bound = diam.powf(2.0 * (s0 - s)) * ii0.value;
            let slack = 3.0 * (ii.error + diam.powf(2.0 * (s0 - s)) * ii0.error);
            if ii.value > bound + slack {
                failures += 1;
            }
            pts.push(crate::asymptotics::SweepPoint { s, estimate: ii.scale(s) });
        }
        let r = crate::asymptotics::extrapolate(pts)?;
        let tol = 3.0 * r.limit_error + 1e-3 * ii0.value;
        worst_limit = worst_limit.max(r.limit.abs() / tol);
        if r.limit.abs() > tol {
            failures += 1;
        }
    }
    Ok((
        failures == 0,
        format!(
            "{failures} failures over {} fields; largest |lim s·II| relative to its tolerance {worst_limit:.2}",
            fields.len()
        ),
    ))
}
