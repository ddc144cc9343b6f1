//! Integration over the unit sphere `S^{d-1}` for `d = 1, 2, 3`.
//!
//! Directions are parametrized by the polar angle `θ` in the plane and by
//! `(z, θ)` in space. Breakpoints are angles for `d = 2` and heights `z`
//! for `d = 3`.

use std::f64::consts::TAU;

use crate::quad::{self, EstimateWithError, Tol};

fn sorted_breaks(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = extra.iter().copied().filter(|v| *v > lo && *v < hi).collect();
    b.push(lo);
    b.push(hi);
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    b
}

/// Adaptive integral of `f` over the sphere.
pub fn integrate<F: Fn(&[f64]) -> f64>(d: usize, f: F, breaks: &[f64]) -> EstimateWithError {
    integrate_tol(d, f, breaks, Tol::new(1e-13, 1e-11))
}

/// [`integrate`] with explicit tolerances for the outer parameter.
pub fn integrate_tol<F: Fn(&[f64]) -> f64>(d: usize, f: F, breaks: &[f64], tol: Tol) -> EstimateWithError {
    match d {
        1 => EstimateWithError::exact(f(&[1.0]) + f(&[-1.0])),
        2 => {
            let b = sorted_breaks(0.0, TAU, breaks);
            quad::adaptive_pieces(|t| f(&[t.cos(), t.sin()]), &b, tol).estimate()
        }
        _ => {
            let zb = sorted_breaks(-1.0, 1.0, breaks);
            let inner = std::cell::Cell::new(0.0f64);
            let r = quad::adaptive_pieces(
                |z| {
                    let q = (1.0 - z * z).max(0.0).sqrt();
                    let a = quad::adaptive(
                        |t| f(&[q * t.cos(), q * t.sin(), z]),
                        0.0,
                        TAU,
                        Tol { abs: tol.abs / 10.0, rel: tol.rel / 10.0, max_intervals: 400 },
                    );
                    inner.set(inner.get().max(a.error));
                    a.value
                },
                &zb,
                Tol { max_intervals: 400, ..tol },
            );
            EstimateWithError::analytic(r.value, r.error + 2.0 * inner.get())
        }
    }
}

/// A fixed cubature rule on the sphere: nodes with positive weights
/// summing to `dω_d`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub d: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Composite Gauss–Legendre in `θ` (`d = 2`) or in `z` times a
    /// trapezoid rule in `θ` (`d = 3`). `resolution` controls the panel
    /// count.
    pub fn new(d: usize, resolution: usize, breaks: &[f64]) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let res = resolution.max(1);
        match d {
            1 => {
                nodes.push([1.0, 0.0, 0.0]);
                nodes.push([-1.0, 0.0, 0.0]);
                weights.extend([1.0, 1.0]);
            }
            2 => {
                let b = sorted_breaks(0.0, TAU, breaks);
                for w in b.windows(2) {
                    let panels = ((res as f64 * (w[1] - w[0]) / TAU).ceil() as usize).max(1);
                    for (t, wt) in quad::composite_gl(w[0], w[1], panels, 10) {
                        nodes.push([t.cos(), t.sin(), 0.0]);
                        weights.push(wt);
                    }
                }
            }
            _ => {
                let b = sorted_breaks(-1.0, 1.0, breaks);
                let nt = 4 * res;
                for w in b.windows(2) {
                    let panels = ((res as f64 * (w[1] - w[0]) / 2.0).ceil() as usize).max(1);
                    for (z, wz) in quad::composite_gl(w[0], w[1], panels, 8) {
                        let q = (1.0 - z * z).max(0.0).sqrt();
                        for k in 0..nt {
                            let t = TAU * (k as f64 + 0.5) / nt as f64;
                            nodes.push([q * t.cos(), q * t.sin(), z]);
                            weights.push(wz * TAU / nt as f64);
                        }
                    }
                }
            }
        }
        Self { d, nodes, weights }
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(&n[..self.d])).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Nodes `(g(θ), w)` with equal values merged, when at most `max_distinct`
/// distinct values occur; otherwise the input unchanged.
pub fn merge_equal_values(mut nodes: Vec<(f64, f64)>, max_distinct: usize) -> Vec<(f64, f64)> {
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (v, w) in &nodes {
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 += w,
            _ => {
                if out.len() == max_distinct {
                    return nodes;
                }
                out.push((*v, *w))
            }
        }
    }
    out
}
