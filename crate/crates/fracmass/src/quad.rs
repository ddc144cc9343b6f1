//! Integration engine.
//!
//! Deterministic adaptive Gauss–Kronrod quadrature for one-dimensional
//! integrands (with an optional algebraic endpoint singularity and
//! semi-infinite ranges), Gauss–Legendre rules for fixed tensor products,
//! and seeded batch Monte Carlo whose result depends only on
//! `(seed, budget, batch_count)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the error attached to an estimate should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Exact,
    Analytic,
    Statistical,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Exact => "exact",
            ErrorKind::Analytic => "analytic",
            ErrorKind::Statistical => "statistical",
        }
    }
}

/// A value with an error that is either a 1σ standard error, an analytic
/// bound, or zero for exact results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub error: f64,
    pub error_kind: ErrorKind,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0, error_kind: ErrorKind::Exact }
    }

    pub fn analytic(value: f64, error: f64) -> Self {
        if error == 0.0 {
            return Self::exact(value);
        }
        Self { value, error: error.abs(), error_kind: ErrorKind::Analytic }
    }

    pub fn statistical(value: f64, error: f64) -> Self {
        Self { value, error: error.abs(), error_kind: ErrorKind::Statistical }
    }

    pub fn scale(self, c: f64) -> Self {
        Self { value: self.value * c, error: self.error * c.abs(), error_kind: self.error_kind }
    }

    /// Sum of two estimates. Analytic bounds add linearly; anything
    /// involving a statistical part is combined in quadrature.
    pub fn add(self, other: Self) -> Self {
        let kind = self.error_kind.max(other.error_kind);
        let error = match kind {
            ErrorKind::Exact => 0.0,
            ErrorKind::Analytic => self.error + other.error,
            ErrorKind::Statistical => self.error.hypot(other.error),
        };
        Self { value: self.value + other.value, error, error_kind: kind }
    }

    /// Widens the error by an extra analytic bound.
    pub fn with_bound(self, bound: f64) -> Self {
        self.add(Self::analytic(0.0, bound))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.error.is_finite()
    }
}

/// Parameters shared by all Monte-Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub sample_budget: u64,
    pub rng_seed: u64,
    pub target_rel_error: f64,
    pub batch_count: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { sample_budget: 200_000, rng_seed: 0x5eed_f00d, target_rel_error: 1e-3, batch_count: 20 }
    }
}

impl QuadratureSpec {
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.sample_budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_batches(mut self, batches: u32) -> Self {
        self.batch_count = batches;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_budget < 1000 {
            return Err(Error::InvalidParameter("sample_budget must be at least 1000".into()));
        }
        if self.batch_count < 2 {
            return Err(Error::InvalidParameter("batch_count must be at least 2".into()));
        }
        if self.sample_budget % self.batch_count as u64 != 0 {
            return Err(Error::InvalidParameter("batch_count must divide sample_budget".into()));
        }
        if !(self.target_rel_error > 0.0 && self.target_rel_error < 1.0) {
            return Err(Error::InvalidParameter("target_rel_error must lie in (0,1)".into()));
        }
        Ok(())
    }

    pub fn samples_per_batch(&self) -> u64 {
        self.sample_budget / self.batch_count as u64
    }
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 10/21

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Output of the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Adaptive {
    pub fn estimate(&self) -> EstimateWithError {
        EstimateWithError::analytic(self.value, self.error)
    }
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-10, max_intervals: 2000 }
    }
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration on a finite interval.
/// Always returns the best estimate; `converged` reports whether the
/// tolerance was met.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tol) -> Adaptive {
    if a == b {
        return Adaptive { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    // panels too narrow to split are retired here
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    loop {
        if !(total.is_finite() && err.is_finite()) {
            break;
        }
        if err + frozen_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if (p.b - p.a).abs() <= 1e-14 * (p.a.abs() + p.b.abs()).max(1e-300) || m == p.a || m == p.b {
            frozen_err += p.error;
            frozen_val += p.value;
            total -= p.value;
            err -= p.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk21(&mut f, p.a, m);
        let (v2, e2) = gk21(&mut f, m, p.b);
        evaluations += 42;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
    }
    // re-sum to limit drift from incremental updates
    let value: f64 = heap.iter().map(|p| p.value).sum::<f64>() + frozen_val;
    let error: f64 = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
    let converged = error <= tol.abs.max(tol.rel * value.abs()) * 1.0000001;
    Adaptive { value, error, evaluations, converged }
}

/// Integrates over consecutive pieces `[breaks[i], breaks[i+1]]`, splitting
/// the absolute tolerance evenly. `breaks` must be sorted.
pub fn adaptive_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tol) -> Adaptive {
    let n = breaks.len().saturating_sub(1).max(1);
    let piece_tol = Tol { abs: tol.abs / n as f64, ..tol };
    let mut out = Adaptive { value: 0.0, error: 0.0, evaluations: 0, converged: true };
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = adaptive(&mut f, w[0], w[1], piece_tol);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    }
    out
}

/// Integrates `f` over `[a, b]`, where `b` may be `+∞`.
///
/// `endpoint_singularity_exponent` declares `f(x) ~ (x-a)^β` near the lower
/// endpoint with `β > -1`; the substitution `x = a + (b-a)·u^{1/(β+1)}`
/// absorbs it. Semi-infinite ranges are mapped through `x = c·e^v`.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    endpoint_singularity_exponent: f64,
) -> Result<EstimateWithError> {
    let beta = endpoint_singularity_exponent;
    if !(a < b) || a.is_nan() {
        return Err(Error::InvalidParameter("integrate_1d requires a < b".into()));
    }
    if beta <= -1.0 {
        return Err(Error::InvalidParameter("endpoint singularity exponent must exceed -1".into()));
    }
    let tol = Tol { abs: 1e-13, rel: 1e-12, max_intervals: 4000 };
    let finite_part = |lo: f64, hi: f64| -> Adaptive {
        if beta == 0.0 {
            adaptive(&f, lo, hi, tol)
        } else {
            let k = 1.0 / (beta + 1.0);
            let len = hi - lo;
            adaptive(
                |u: f64| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    let x = lo + len * u.powf(k);
                    f(x) * len * k * u.powf(k - 1.0)
                },
                0.0,
                1.0,
                tol,
            )
        }
    };
    let result = if b.is_infinite() {
        let c = (a + 1.0).max(2.0 * a.abs() + 1.0);
        let head = finite_part(a, c);
        let tail = adaptive(
            |w: f64| {
                if w >= 1.0 {
                    return 0.0;
                }
                let v = w / (1.0 - w);
                if v > 700.0 {
                    return 0.0;
                }
                let x = c * v.exp();
                let fx = f(x);
                if fx == 0.0 {
                    0.0
                } else {
                    fx * x / ((1.0 - w) * (1.0 - w))
                }
            },
            0.0,
            1.0,
            tol,
        );
        Adaptive {
            value: head.value + tail.value,
            error: head.error + tail.error,
            evaluations: head.evaluations + tail.evaluations,
            converged: head.converged && tail.converged,
        }
    } else {
        finite_part(a, b)
    };
    if !result.value.is_finite() {
        return Err(Error::NonFinite);
    }
    if !result.converged {
        return Err(Error::NonConvergent(format!(
            "error {:.3e} after {} evaluations",
            result.error, result.evaluations
        )));
    }
    Ok(result.estimate())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Closed-form power integrals

/// `∫_a^b r^β dr` for `0 ≤ a ≤ b`, stable when `β ≈ -1`.
pub fn power_integral(a: f64, b: f64, beta: f64) -> f64 {
    let g = beta + 1.0;
    if b <= a {
        return 0.0;
    }
    if a == 0.0 {
        return b.powf(g) / g;
    }
    if b.is_infinite() {
        return -a.powf(g) / g;
    }
    let l = (b / a).ln();
    if g == 0.0 {
        l
    } else {
        a.powf(g) * (g * l).exp_m1() / g
    }
}

/// `∫_R^∞ r^{-1-e} dr = R^{-e}/e`.
pub fn radial_tail(r: f64, e: f64) -> f64 {
    r.powf(-e) / e
}

/// A radial density that is a mixture of power laws on consecutive annuli,
/// normalized in closed form.
#[derive(Debug, Clone)]
pub struct PowerLawRadial {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone)]
struct Segment {
    a: f64,
    b: f64,
    beta: f64,
    mass: f64,
    norm: f64,
}

impl PowerLawRadial {
    /// `pieces` holds `(a, b, β, mixture weight)`; weights are normalized.
    pub fn new(pieces: &[(f64, f64, f64, f64)]) -> Result<Self> {
        let total: f64 = pieces.iter().map(|p| p.3).sum();
        if pieces.is_empty() || !(total > 0.0) {
            return Err(Error::InvalidParameter("empty radial density".into()));
        }
        let mut segments = Vec::new();
        for &(a, b, beta, m) in pieces {
            if !(a >= 0.0 && b > a) || (a == 0.0 && beta <= -1.0) {
                return Err(Error::InvalidParameter("non-normalizable radial segment".into()));
            }
            segments.push(Segment { a, b, beta, mass: m / total, norm: power_integral(a, b, beta) });
        }
        Ok(Self { segments })
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| r >= s.a && r < s.b)
            .map(|s| s.mass * r.powf(s.beta) / s.norm)
            .sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.gen();
        let mut seg = &self.segments[self.segments.len() - 1];
        for s in &self.segments {
            if u < s.mass {
                seg = s;
                break;
            }
            u -= s.mass;
        }
        let v: f64 = rng.gen::<f64>() * seg.norm;
        let g = seg.beta + 1.0;
        let r = if seg.a == 0.0 {
            (v * g).powf(1.0 / g)
        } else if g == 0.0 {
            seg.a * v.exp()
        } else {
            seg.a * ((v * g / seg.a.powf(g)).ln_1p() / g).exp()
        };
        r.clamp(seg.a, seg.b)
    }
}

/// Uniformly distributed unit vector in `ℝ^d`.
pub fn random_direction<R: Rng>(rng: &mut R, out: &mut [f64]) {
    match out.len() {
        1 => out[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 },
        2 => {
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            out[0] = t.cos();
            out[1] = t.sin();
        }
        _ => {
            let z = 2.0 * rng.gen::<f64>() - 1.0;
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let q = (1.0 - z * z).max(0.0).sqrt();
            out[0] = q * t.cos();
            out[1] = q * t.sin();
            out[2] = z;
        }
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// RNG stream for one batch; depends only on `(seed, batch)`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Runs `K` estimators over the same samples. `draw` returns the `K`
/// sample values (already multiplied by importance weights) or `None` for
/// a rejected draw, which still counts toward the budget.
///
/// Batches run on the rayon pool and are reduced in index order, so the
/// result does not depend on the worker count.
pub fn run_batches<const K: usize, D>(spec: &QuadratureSpec, draw: D) -> Result<[EstimateWithError; K]>
where
    D: Fn(&mut ChaCha8Rng) -> Option<[f64; K]> + Sync,
{
    spec.validate()?;
    let n = spec.samples_per_batch();
    let batches: Vec<Result<([f64; K], u64)>> = (0..spec.batch_count as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(spec.rng_seed, b);
            let mut acc = [0.0; K];
            let mut hits = 0u64;
            for _ in 0..n {
                if let Some(v) = draw(&mut rng) {
                    hits += 1;
                    for k in 0..K {
                        if !v[k].is_finite() {
                            return Err(Error::NonFinite);
                        }
                        acc[k] += v[k];
                    }
                }
            }
            for a in acc.iter_mut() {
                *a /= n as f64;
            }
            Ok((acc, hits))
        })
        .collect();
    let mut means = Vec::with_capacity(batches.len());
    let mut hits = 0;
    for b in batches {
        let (m, h) = b?;
        hits += h;
        means.push(m);
    }
    if hits == 0 {
        return Err(Error::NoSamples);
    }
    let nb = means.len() as f64;
    let mut out = [EstimateWithError::exact(0.0); K];
    for k in 0..K {
        let mean = means.iter().map(|m| m[k]).sum::<f64>() / nb;
        let var = means.iter().map(|m| (m[k] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        out[k] = EstimateWithError::statistical(mean, (var / nb).sqrt());
    }
    Ok(out)
}

/// A sampler of point pairs with an exactly known density.
pub trait PairSampler: Sync {
    fn dim(&self) -> usize;
    /// Fills `x`, `y` and returns `1/q(x, y)`; zero rejects the draw.
    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64], y: &mut [f64]) -> f64;
}

/// Importance-sampling estimate of `∬ g(x, y) dx dy` with batch-mean
/// standard error.
pub fn mc_double_integral<G, S>(g: G, sampler: &S, spec: &QuadratureSpec) -> Result<EstimateWithError>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
    S: PairSampler,
{
    let d = sampler.dim();
    let [est] = run_batches::<1, _>(spec, |rng| {
        let mut x = [0.0; 3];
        let mut y = [0.0; 3];
        let w = sampler.draw(rng, &mut x[..d], &mut y[..d]);
        if w == 0.0 {
            return None;
        }
        Some([g(&x[..d], &y[..d]) * w])
    })?;
    Ok(est)
}

/// Pairs drawn uniformly from the box `[lo, hi]^2` in dimension `d`.
#[derive(Debug, Clone)]
pub struct UniformBoxPairs {
    pub d: usize,
    pub lo: f64,
    pub hi: f64,
}

impl PairSampler for UniformBoxPairs {
    fn dim(&self) -> usize {
        self.d
    }
    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64], y: &mut [f64]) -> f64 {
        let w = self.hi - self.lo;
        for i in 0..self.d {
            x[i] = self.lo + w * rng.gen::<f64>();
            y[i] = self.lo + w * rng.gen::<f64>();
        }
        w.powi(2 * self.d as i32)
    }
}

/// Pairs on `[0,1]²` (so `d = 1`) with density proportional to
/// `|x-y|^{-γ}`, `0 ≤ γ < 1`.
#[derive(Debug, Clone)]
pub struct DiagonalPowerPairs {
    pub gamma: f64,
}

impl DiagonalPowerPairs {
    fn norm(&self) -> f64 {
        // ∬_{[0,1]²} |x-y|^{-γ} = 2/((1-γ)(2-γ))
        2.0 / ((1.0 - self.gamma) * (2.0 - self.gamma))
    }
}

impl PairSampler for DiagonalPowerPairs {
    fn dim(&self) -> usize {
        1
    }
    fn draw(&self, rng: &mut ChaCha8Rng, x: &mut [f64], y: &mut [f64]) -> f64 {
        // z = |x-y| has density ∝ z^{-γ}(1-z); sample by rejection from z^{-γ}
        let g = 1.0 - self.gamma;
        let z = loop {
            let z = rng.gen::<f64>().powf(1.0 / g);
            if rng.gen::<f64>() < 1.0 - z {
                break z;
            }
        };
        let lo = rng.gen::<f64>() * (1.0 - z);
        if rng.gen::<bool>() {
            x[0] = lo;
            y[0] = lo + z;
        } else {
            x[0] = lo + z;
            y[0] = lo;
        }
        self.norm() * z.powf(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unit_integrand_is_exact() {
        let r = integrate_1d(|_| 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heavy_tail_closed_form() {
        let r = integrate_1d(|x| x.powf(-1.1), 1.0, f64::INFINITY, 0.0).unwrap();
        assert!((r.value - 10.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn inverse_square_root_with_declared_exponent() {
        let r = integrate_1d(|x| x.powf(-0.5), 0.0, 1.0, -0.5).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(integrate_1d(|x| x, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((s - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn power_integral_near_log_case() {
        let e = 1e-9;
        let v = power_integral(2.0, 5.0, -1.0 - e);
        let expect = (2f64.powf(-e) - 5f64.powf(-e)) / e;
        assert!((v - expect).abs() < 1e-6 * expect);
        assert!((power_integral(2.0, 5.0, -1.0) - (2.5f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn power_law_sampler_matches_density() {
        let rad = PowerLawRadial::new(&[(0.0, 0.1, -0.6, 0.3), (0.1, 10.0, -1.05, 0.7)]).unwrap();
        // Monte Carlo check of E[1/pdf] over the support = support length
        let mut rng = batch_rng(7, 0);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let r = rad.sample(&mut rng);
            assert!((0.0..=10.0).contains(&r));
            acc += 1.0 / rad.pdf(r);
        }
        let mean = acc / n as f64;
        assert!((mean - 10.0).abs() < 0.3, "{mean}");
    }

    #[test]
    fn uniform_pairs_integrate_constant() {
        let spec = QuadratureSpec::default().with_budget(20_000);
        let r = mc_double_integral(|_, _| 1.0, &UniformBoxPairs { d: 1, lo: 0.0, hi: 1.0 }, &spec).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().with_budget(999).validate().is_err());
        assert!(QuadratureSpec::default().with_budget(1001).validate().is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }

    #[test]
    fn estimate_combination_rules() {
        let a = EstimateWithError::analytic(1.0, 0.1);
        let b = EstimateWithError::analytic(2.0, 0.2);
        let c = a.add(b);
        assert_eq!(c.error_kind, ErrorKind::Analytic);
        assert!((c.error - 0.3).abs() < 1e-15);
        let s = EstimateWithError::statistical(0.0, 0.4);
        let t = c.add(s);
        assert_eq!(t.error_kind, ErrorKind::Statistical);
        assert!((t.error - 0.5).abs() < 1e-12);
        assert_eq!(EstimateWithError::exact(1.0).add(EstimateWithError::exact(2.0)).error, 0.0);
    }
}
