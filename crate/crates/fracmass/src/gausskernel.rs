//! Gaussian fractional kernel built from the Mehler kernel, and the
//! Gaussian fractional perimeter
//! `P^γ_s(E; Ω) = ½ ∬_{Q_Ω} |χ_E(x) − χ_E(y)| ρ_s(x, y) dγ(x) dγ(y)`.
//!
//! Exchanging the order of integration gives
//! `P^γ_s = ½ ∫_0^∞ t^{−s/2−1} G(t) dt` where `G(t)` is the probability that
//! an Ornstein–Uhlenbeck pair `(X, e^{−t}X + √(1−e^{−2t}) Z)` started from
//! `γ` lies in `Q_Ω` and separates `E` from its complement. `G` is computed
//! once on a fixed node set, after which every `s` costs a dot product.

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use libm::erfc;

use crate::error::{check_s, Error, Result};
use crate::geometry::Region;
use crate::quad::{self, batch_rng, EstimateWithError, QuadratureSpec, Tol};

/// Radius beyond which the Gaussian density is treated as zero.
const CUTOFF: f64 = 40.0;

fn check_gauss_dim(d: usize) -> Result<()> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// `Φ(z)`, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// The standard Gaussian measure on `ℝ^d`, `d ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GaussianMeasure {
    pub d: usize,
}

impl GaussianMeasure {
    pub fn new(d: usize) -> Result<Self> {
        check_gauss_dim(d)?;
        Ok(Self { d })
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (TAU).powf(-(self.d as f64) / 2.0) * (-0.5 * r2).exp()
    }

    /// `γ(R)` by exact radial integration along rays from the origin; in
    /// the plane the angle is integrated adaptively.
    pub fn measure(&self, region: &Region) -> Result<EstimateWithError> {
        region.validate(self.d)?;
        match self.d {
            1 => {
                let cells = Cells::new(&[region]);
                let v = cells.iter().filter(|c| c.inside[0]).map(|c| c.mass()).sum();
                Ok(EstimateWithError::exact(v))
            }
            _ => {
                let r = quad::adaptive(|th| ray_mass(region, th), 0.0, TAU, Tol::new(1e-13, 1e-11));
                Ok(r.estimate())
            }
        }
    }
}

/// `(1/2π)∫ e^{−r²/2} r dr` over the parts of the ray at angle `θ` inside
/// `region`.
fn ray_mass(region: &Region, th: f64) -> f64 {
    let u = [th.cos(), th.sin()];
    let mut ts = Vec::new();
    region.ray_breaks(&[0.0, 0.0], &u, f64::NEG_INFINITY, CUTOFF.ln(), &mut ts);
    let mut rs: Vec<f64> = ts.iter().map(|t| t.exp()).filter(|r| *r > 0.0 && *r < CUTOFF).collect();
    rs.push(0.0);
    rs.push(CUTOFF);
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let mut total = 0.0;
    for w in rs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if region.inside(&[mid * u[0], mid * u[1]]) {
            total += (-0.5 * w[0] * w[0]).exp() - (-0.5 * w[1] * w[1]).exp();
        }
    }
    total / TAU
}

/// Partition of the line into intervals on which membership in every
/// listed region is constant.
struct Cells {
    cells: Vec<Cell>,
}

struct Cell {
    lo: f64,
    hi: f64,
    inside: Vec<bool>,
}

impl Cell {
    fn mass(&self) -> f64 {
        std_normal_cdf(self.hi) - std_normal_cdf(self.lo)
    }
}

impl Cells {
    fn new(regions: &[&Region]) -> Self {
        let mut pts = vec![0.0];
        for r in regions {
            for u in [1.0, -1.0] {
                let mut ts = Vec::new();
                r.ray_breaks(&[0.0], &[u], f64::NEG_INFINITY, CUTOFF.ln(), &mut ts);
                pts.extend(ts.iter().map(|t| u * t.exp()).filter(|x| x.abs() < CUTOFF));
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(pts);
        edges.push(f64::INFINITY);
        let cells = edges
            .windows(2)
            .map(|w| {
                let mid = match (w[0].is_finite(), w[1].is_finite()) {
                    (true, true) => 0.5 * (w[0] + w[1]),
                    (false, true) => w[1] - 1.0,
                    (true, false) => w[0] + 1.0,
                    (false, false) => 0.0,
                };
                Cell { lo: w[0], hi: w[1], inside: regions.iter().map(|r| r.inside(&[mid])).collect() }
            })
            .collect();
        Self { cells }
    }

    fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }
}

/// The Mehler kernel `M_t(x, y)`, the density of the Ornstein–Uhlenbeck
/// transition with respect to `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MehlerKernel {
    pub t: f64,
}

impl MehlerKernel {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter("Mehler time must be positive".into()));
        }
        Ok(Self { t })
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.log_eval(x, y).exp()
    }

    /// `M_t(x, y) − 1` without cancellation for large `t`.
    pub fn eval_minus_one(&self, x: &[f64], y: &[f64]) -> f64 {
        self.log_eval(x, y).exp_m1()
    }

    fn log_eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let q = (-self.t).exp();
        let one_minus_q2 = -(-2.0 * self.t).exp_m1();
        let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let norms: f64 = x.iter().chain(y).map(|v| v * v).sum();
        // q²|x|² − 2q x·y + q²|y|² = q|x−y|² − q(1−q)(|x|²+|y|²)
        let num = q * diff2 - q * (-(-self.t).exp_m1()) * norms;
        -(x.len() as f64) / 2.0 * one_minus_q2.ln() - num / (2.0 * one_minus_q2)
    }
}

/// `ρ_s(x, y) = ∫_0^∞ M_t(x, y) t^{−s/2−1} dt`, split at `t = 1`. The inner
/// part is integrated in `v = −ln t`; the outer part is `2/s` plus the
/// integral of `M_t − 1`.
pub fn rho_s(x: &[f64], y: &[f64], s: f64) -> Result<EstimateWithError> {
    check_s(s)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if diff2 == 0.0 {
        return Err(Error::InvalidParameter("ρ_s diverges on the diagonal".into()));
    }
    let kernel = |t: f64| MehlerKernel { t };
    // beyond v_max the small-time factor exp(−|x−y|²/(4t)) is below e^{−700}
    let v_max = (2800.0 / diff2).ln().max(1.0) + 1.0;
    let tol = Tol { abs: 0.0, rel: 1e-10, max_intervals: 2000 };
    let inner = quad::adaptive(|v| kernel((-v).exp()).eval(x, y) * (0.5 * s * v).exp(), 0.0, v_max, tol);
    let outer = quad::adaptive(|t| kernel(t).eval_minus_one(x, y) * t.powf(-0.5 * s - 1.0), 1.0, 60.0, tol);
    let value = inner.value + outer.value + 2.0 / s;
    Ok(EstimateWithError::analytic(value, inner.error + outer.error + 1e-15 * value))
}

/// Fixed nodes: the part `t ≤ 1` uses `v = −ln t ∈ [0, 60]`, the part
/// `t > 1` runs to `t = 50`.
#[derive(Debug, Clone)]
struct Node {
    t: f64,
    weight: f64,
    inner: bool,
}

fn node_rule(order: usize) -> Vec<Node> {
    let mut nodes = Vec::new();
    let inner_edges = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0];
    for w in inner_edges.windows(2) {
        for (v, wt) in quad::composite_gl(w[0], w[1], 1, order) {
            nodes.push(Node { t: (-v).exp(), weight: wt, inner: true });
        }
    }
    let outer_edges = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0];
    for w in outer_edges.windows(2) {
        for (t, wt) in quad::composite_gl(w[0], w[1], 1, order) {
            nodes.push(Node { t, weight: wt, inner: false });
        }
    }
    nodes
}

/// Linear functional giving `s·P^γ_s` from `G` at the nodes and `G(∞)`.
fn scaled_from(nodes: &[Node], g: &[f64], g_inf: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for (n, gv) in nodes.iter().zip(g) {
        if n.inner {
            acc += n.weight * gv * n.t.powf(-0.5 * s);
        } else {
            acc += n.weight * (gv - g_inf) * n.t.powf(-0.5 * s - 1.0);
        }
    }
    g_inf + 0.5 * s * acc
}

/// `G(t)` tabulated on the node rule, reusable across `s`.
#[derive(Debug, Clone)]
pub struct GaussPerimeterSeries {
    d: usize,
    nodes: Vec<Node>,
    /// One row per batch: `G` at the nodes followed by `G(∞)`.
    rows: Vec<Vec<f64>>,
    /// Deterministic runs carry a coarser rule for the error estimate.
    coarse: Option<(Vec<Node>, Vec<f64>)>,
    trivial: bool,
}

const ORDER: usize = 10;
const COARSE_ORDER: usize = 6;

impl GaussPerimeterSeries {
    pub fn new(e: &Region, omega: &Region, d: usize, spec: &QuadratureSpec) -> Result<Self> {
        check_gauss_dim(d)?;
        e.validate(d)?;
        omega.validate(d)?;
        spec.validate()?;
        let nodes = node_rule(ORDER);
        if matches!(e, Region::Empty | Region::Whole) || matches!(omega, Region::Empty) {
            return Ok(Self { d, nodes, rows: vec![], coarse: None, trivial: true });
        }
        if d == 1 {
            let cells = Cells::new(&[e, omega]);
            let tab = |nodes: &[Node]| -> Vec<f64> {
                let mut row: Vec<f64> = nodes.par_iter().map(|n| separation_1d(&cells, n.t)).collect();
                row.push(separation_1d_independent(&cells));
                row
            };
            let row = tab(&nodes);
            let coarse_nodes = node_rule(COARSE_ORDER);
            let coarse_row = tab(&coarse_nodes);
            return Ok(Self { d, nodes, rows: vec![row], coarse: Some((coarse_nodes, coarse_row)), trivial: false });
        }
        let rows = separation_2d(e, omega, &nodes, spec)?;
        Ok(Self { d, nodes, rows, coarse: None, trivial: false })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `s·P^γ_s(E; Ω)`.
    pub fn scaled(&self, s: f64) -> Result<EstimateWithError> {
        check_s(s)?;
        if self.trivial {
            return Ok(EstimateWithError::exact(0.0));
        }
        let k = self.nodes.len();
        let per_row: Vec<f64> = self.rows.iter().map(|r| scaled_from(&self.nodes, &r[..k], r[k], s)).collect();
        Ok(match &self.coarse {
            Some((cn, cr)) => {
                let fine = per_row[0];
                let coarse = scaled_from(cn, &cr[..cn.len()], cr[cn.len()], s);
                EstimateWithError::analytic(fine, (fine - coarse).abs() + 1e-14 * fine.abs())
            }
            None => mean_and_error(&per_row),
        })
    }

    /// `G(∞) = lim_{s→0} s·P^γ_s`, as tabulated.
    pub fn limit(&self) -> EstimateWithError {
        if self.trivial {
            return EstimateWithError::exact(0.0);
        }
        let k = self.nodes.len();
        let vals: Vec<f64> = self.rows.iter().map(|r| r[k]).collect();
        if self.coarse.is_some() {
            EstimateWithError::analytic(vals[0], 1e-14)
        } else {
            mean_and_error(&vals)
        }
    }
}

fn mean_and_error(v: &[f64]) -> EstimateWithError {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    EstimateWithError::statistical(mean, (var / n).sqrt())
}

/// `P^γ_s(E; Ω)`.
pub fn gauss_perimeter(e: &Region, omega: &Region, s: f64, d: usize, spec: &QuadratureSpec) -> Result<EstimateWithError> {
    check_s(s)?;
    Ok(GaussPerimeterSeries::new(e, omega, d, spec)?.scaled(s)?.scale(1.0 / s))
}

/// Does the ordered pair of cells count: at least one in `Ω` and the two
/// on different sides of `E`. Index 0 is `E`, index 1 is `Ω`.
fn counts(a: &Cell, b: &Cell) -> bool {
    (a.inside[1] || b.inside[1]) && a.inside[0] != b.inside[0]
}

/// `G(t)` in one dimension: `∫ γ(x) P(Y ∈ cell | x)` summed over the
/// counted cell pairs, with `Y | x ~ N(qx, 1−q²)`.
fn separation_1d(cells: &Cells, t: f64) -> f64 {
    let q = (-t).exp();
    let sigma = (-(-2.0 * t).exp_m1()).sqrt();
    let mut total = 0.0;
    for a in cells.iter() {
        let targets: Vec<&Cell> = cells.iter().filter(|b| counts(a, b)).collect();
        if targets.is_empty() {
            continue;
        }
        let lo = a.lo.max(-12.0);
        let hi = a.hi.min(12.0);
        if lo >= hi {
            continue;
        }
        let f = |x: f64| {
            let m = q * x;
            let p: f64 = targets
                .iter()
                .map(|b| {
                    let up = if b.hi.is_finite() { std_normal_cdf((b.hi - m) / sigma) } else { 1.0 };
                    let dn = if b.lo.is_finite() { std_normal_cdf((b.lo - m) / sigma) } else { 0.0 };
                    up - dn
                })
                .sum();
            (-0.5 * x * x).exp() / (TAU).sqrt() * p
        };
        // the transition probability varies on the scale σ near the cell edges
        let mut brk = vec![lo, hi];
        for b in &targets {
            for edge in [b.lo, b.hi] {
                if edge.is_finite() {
                    for k in [-4.0, -1.0, 0.0, 1.0, 4.0] {
                        let x = (edge + k * sigma) / q;
                        if x > lo && x < hi {
                            brk.push(x);
                        }
                    }
                }
            }
        }
        brk.sort_by(f64::total_cmp);
        brk.dedup();
        total += quad::adaptive_pieces(f, &brk, Tol::new(1e-15, 1e-12)).value;
    }
    total
}

/// `G(∞)` in one dimension: independent pairs.
fn separation_1d_independent(cells: &Cells) -> f64 {
    let mut total = 0.0;
    for a in cells.iter() {
        for b in cells.iter() {
            if counts(a, b) {
                total += a.mass() * b.mass();
            }
        }
    }
    total
}

/// `G` at every node for each batch in the plane, with common random
/// numbers across nodes. `Y(∞)` is the independent draw `Z`.
fn separation_2d(e: &Region, omega: &Region, nodes: &[Node], spec: &QuadratureSpec) -> Result<Vec<Vec<f64>>> {
    let n = spec.samples_per_batch();
    let k = nodes.len();
    let qs: Vec<(f64, f64)> = nodes.iter().map(|nd| ((-nd.t).exp(), (-(-2.0 * nd.t).exp_m1()).sqrt())).collect();
    let rows: Vec<Vec<f64>> = (0..spec.batch_count as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(spec.rng_seed, b);
            let mut acc = vec![0.0; k + 1];
            for _ in 0..n {
                let x = [standard_normal(&mut rng), standard_normal(&mut rng)];
                let z = [standard_normal(&mut rng), standard_normal(&mut rng)];
                let xe = e.inside(&x);
                let xo = omega.inside(&x);
                let hit = |y: &[f64]| {
                    let ye = e.inside(y);
                    (xo || omega.inside(y)) && xe != ye
                };
                for (j, (q, sg)) in qs.iter().enumerate() {
                    let y = [q * x[0] + sg * z[0], q * x[1] + sg * z[1]];
                    if hit(&y) {
                        acc[j] += 1.0;
                    }
                }
                if hit(&z) {
                    acc[k] += 1.0;
                }
            }
            acc.iter_mut().for_each(|a| *a /= n as f64);
            acc
        })
        .collect();
    Ok(rows)
}

/// `2[γ(E)γ(Ω∖E) + γ(E∩Ω)γ(E^c∩Ω^c)]`.
pub fn closed_form_limit(e: &Region, omega: &Region, d: usize) -> Result<EstimateWithError> {
    let g = GaussianMeasure::new(d)?;
    let ec = Region::complement(e.clone());
    let oc = Region::complement(omega.clone());
    let m_e = g.measure(e)?;
    let m_oe = g.measure(&Region::Intersection(vec![omega.clone(), ec.clone()]))?;
    let m_eo = g.measure(&Region::Intersection(vec![e.clone(), omega.clone()]))?;
    let m_out = g.measure(&Region::Intersection(vec![ec, oc]))?;
    let v = 2.0 * (m_e.value * m_oe.value + m_eo.value * m_out.value);
    let err = 2.0 * (m_e.error + m_oe.error + m_eo.error + m_out.error);
    Ok(EstimateWithError::analytic(v, err))
}

/// `∬_{Q_Ω} |χ_E(x) − χ_E(y)| dγ dγ` evaluated directly: cell products on
/// the line, independent Gaussian pairs in the plane.
pub fn dominated_limit(e: &Region, omega: &Region, d: usize, spec: &QuadratureSpec) -> Result<EstimateWithError> {
    check_gauss_dim(d)?;
    e.validate(d)?;
    omega.validate(d)?;
    if d == 1 {
        return Ok(EstimateWithError::exact(separation_1d_independent(&Cells::new(&[e, omega]))));
    }
    let [v] = quad::run_batches::<1, _>(spec, |rng| {
        let x = [standard_normal(rng), standard_normal(rng)];
        let y = [standard_normal(rng), standard_normal(rng)];
        let hit = (omega.inside(&x) || omega.inside(&y)) && e.inside(&x) != e.inside(&y);
        Some([if hit { 1.0 } else { 0.0 }])
    })?;
    Ok(v)
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn measure_totals() {
        for d in 1..=2 {
            let g = GaussianMeasure::new(d).unwrap();
            assert!((g.measure(&Region::Whole).unwrap().value - 1.0).abs() < 1e-12);
        }
        let g1 = GaussianMeasure::new(1).unwrap();
        let m = g1.measure(&Region::interval(-1.0, 1.0)).unwrap().value;
        assert!((m - 0.682_689_492_137_085_9).abs() < 1e-13);
        let g2 = GaussianMeasure::new(2).unwrap();
        // γ₂(B_1) = 1 − e^{−1/2}
        let m = g2.measure(&Region::unit_ball(2)).unwrap().value;
        assert!((m - (1.0 - (-0.5f64).exp())).abs() < 1e-11);
        let q = g2.measure(&Region::sector2(0.0, PI / 2.0)).unwrap().value;
        assert!((q - 0.25).abs() < 1e-10);
        assert!(GaussianMeasure::new(3).is_err());
    }

    #[test]
    fn mehler_properties() {
        let k = MehlerKernel::new(0.7).unwrap();
        let (x, y) = ([0.3, -1.2], [0.9, 0.4]);
        assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
        assert!((MehlerKernel::new(40.0).unwrap().eval(&x, &y) - 1.0).abs() < 1e-15);
        // the transition density integrates to one: ∫ M_t(x,y) γ(y) dy
        let g = GaussianMeasure::new(1).unwrap();
        let r = quad::adaptive(|y| k.eval(&[0.8], &[y]) * g.density(&[y]), -30.0, 30.0, Tol::new(1e-14, 1e-12));
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rho_is_symmetric_and_blows_up() {
        let a = rho_s(&[0.2, 0.1], &[1.0, -0.5], 0.3).unwrap().value;
        let b = rho_s(&[1.0, -0.5], &[0.2, 0.1], 0.3).unwrap().value;
        assert!((a - b).abs() <= 1e-14 * a);
        let mut last = 0.0;
        for k in 0..6 {
            let h = 2f64.powi(-k);
            let v = rho_s(&[0.0], &[h], 0.3).unwrap().value;
            assert!(v > last);
            last = v;
        }
        assert!(rho_s(&[0.5], &[0.5], 0.3).is_err());
    }

    #[test]
    fn rho_matches_direct_integral() {
        // plain adaptive integral over t with the far part in closed form
        let (x, y, s) = ([0.4], [-0.3], 0.4);
        let k = |t: f64| MehlerKernel { t }.eval(&x, &y) * t.powf(-s / 2.0 - 1.0);
        let near = quad::adaptive(k, 1e-6, 1.0, Tol::new(0.0, 1e-12)).value;
        let mid = quad::adaptive(k, 1.0, 80.0, Tol::new(0.0, 1e-12)).value;
        let far = 2.0 / s * 80f64.powf(-s / 2.0);
        let direct = near + mid + far;
        let v = rho_s(&x, &y, s).unwrap();
        assert!((v.value - direct).abs() < 1e-6 * direct, "{} {}", v.value, direct);
    }

    #[test]
    fn half_line_limit() {
        let e = Region::half_space(vec![1.0], 0.0);
        let omega = Region::interval(-1.0, 1.0);
        let target = 2.0
            * (0.5 * (std_normal_cdf(0.0) - std_normal_cdf(-1.0))
                + (std_normal_cdf(1.0) - std_normal_cdf(0.0)) * std_normal_cdf(-1.0));
        let c = closed_form_limit(&e, &omega, 1).unwrap();
        assert!((c.value - target).abs() < 1e-12);
        let dl = dominated_limit(&e, &omega, 1, &QuadratureSpec::default()).unwrap();
        assert!((dl.value - target).abs() < 1e-12);
        let series = GaussPerimeterSeries::new(&e, &omega, 1, &QuadratureSpec::default()).unwrap();
        assert!((series.limit().value - target).abs() < 1e-12);
    }

    #[test]
    fn trivial_sets() {
        let spec = QuadratureSpec::default().with_budget(1000);
        for d in 1..=2 {
            let omega = Region::unit_ball(d);
            assert_eq!(gauss_perimeter(&Region::Empty, &omega, 0.2, d, &spec).unwrap().value, 0.0);
            assert_eq!(gauss_perimeter(&Region::Whole, &omega, 0.2, d, &spec).unwrap().value, 0.0);
        }
    }
}
