//! Sweeps over a decreasing grid of fractional orders and extrapolation of
//! the `s → 0` limit by weighted least squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_s, Error, Result};
use crate::quad::{ErrorKind, EstimateWithError};

/// Relative noise floor used when judging the fit residual.
pub const RESIDUAL_FLOOR: f64 = 1e-4;
/// Reduced residual above which a sweep is flagged as having no clean limit.
pub const RESIDUAL_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `L + a·s`.
    Affine,
    /// `L + a·s + b·s·ln(1/s)`.
    LogCorrected,
}

impl FitModel {
    fn basis(self, s: f64) -> Vec<f64> {
        match self {
            FitModel::Affine => vec![1.0, s],
            FitModel::LogCorrected => vec![1.0, s, -s * s.ln()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub s: f64,
    #[serde(flatten)]
    pub estimate: EstimateWithError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SSweepResult {
    pub points: Vec<SweepPoint>,
    pub limit: f64,
    pub limit_error: f64,
    pub fit_model: FitModel,
    pub coefficients: Vec<f64>,
    /// Reduced residual `sqrt(χ²/(n−k))` with point errors floored at
    /// [`RESIDUAL_FLOOR`] relative.
    pub residual: f64,
    /// Set when the residual exceeds [`RESIDUAL_LIMIT`].
    pub no_clean_limit: bool,
}

/// `n` geometrically spaced values from `hi` down to `lo`.
pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let r = (lo / hi).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| if i == n - 1 { lo } else { hi * r.powi(i as i32) }).collect()
}

/// `10^{-1}, 10^{-1.5}, …, 10^{-4}`.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-4, 7)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 5 {
        return Err(Error::InvalidParameter("s grid needs at least 5 points".into()));
    }
    for &s in grid {
        check_s(s)?;
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("s grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Evaluates `f` on the grid (in parallel) and extrapolates.
pub fn sweep<F>(f: F, grid: &[f64]) -> Result<SSweepResult>
where
    F: Fn(f64) -> Result<EstimateWithError> + Sync,
{
    check_grid(grid)?;
    let points: Vec<Result<SweepPoint>> =
        grid.par_iter().map(|&s| f(s).map(|estimate| SweepPoint { s, estimate })).collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    extrapolate(points)
}

/// Fits both models to already computed points and keeps the one with
/// the smaller residual.
pub fn extrapolate(points: Vec<SweepPoint>) -> Result<SSweepResult> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter("extrapolation needs at least 4 points".into()));
    }
    if points.iter().any(|p| !p.estimate.is_finite()) {
        return Err(Error::NonFinite);
    }
    let affine = fit(&points, FitModel::Affine);
    let log = fit(&points, FitModel::LogCorrected);
    let best = match (affine, log) {
        (Some(a), Some(l)) => {
            if l.residual < a.residual {
                l
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(l)) => l,
        (None, None) => return Err(Error::NonConvergent("singular least-squares system".into())),
    };
    let mut by_s: Vec<&SweepPoint> = points.iter().collect();
    by_s.sort_by(|a, b| a.s.total_cmp(&b.s));
    let floor = by_s.iter().take(3).map(|p| p.estimate.error).fold(0.0, f64::max);
    let limit_error = (best.sigma * best.residual_raw.max(1.0)).max(floor);
    Ok(SSweepResult {
        limit: best.coef[0],
        limit_error,
        fit_model: best.model,
        coefficients: best.coef,
        residual: best.residual,
        no_clean_limit: best.residual > RESIDUAL_LIMIT,
        points,
    })
}

struct Fit {
    model: FitModel,
    coef: Vec<f64>,
    sigma: f64,
    residual: f64,
    residual_raw: f64,
}

fn point_sigma(e: &EstimateWithError) -> f64 {
    let eps = f64::EPSILON * e.value.abs().max(f64::MIN_POSITIVE);
    match e.error_kind {
        ErrorKind::Exact => eps,
        _ => e.error.max(eps),
    }
}

fn fit(points: &[SweepPoint], model: FitModel) -> Option<Fit> {
    let k = model.basis(0.5).len();
    let n = points.len();
    if n <= k {
        return None;
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let w = 1.0 / point_sigma(&p.estimate);
            model.basis(p.s).into_iter().map(|b| b * w).collect()
        })
        .collect();
    let rhs: Vec<f64> = points.iter().map(|p| p.estimate.value / point_sigma(&p.estimate)).collect();
    let (coef, rinv) = least_squares(&rows, &rhs, k)?;
    // variance of the intercept: first row of R^{-1} R^{-T}
    let sigma = rinv[0].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut chi_raw = 0.0;
    let mut chi = 0.0;
    for p in points {
        let pred: f64 = model.basis(p.s).iter().zip(&coef).map(|(b, c)| b * c).sum();
        let r = p.estimate.value - pred;
        let s_raw = point_sigma(&p.estimate);
        let s_floor = s_raw.hypot(RESIDUAL_FLOOR * p.estimate.value.abs());
        chi_raw += (r / s_raw).powi(2);
        chi += (r / s_floor).powi(2);
    }
    let dof = (n - k) as f64;
    Some(Fit { model, coef, sigma, residual: (chi / dof).sqrt(), residual_raw: (chi_raw / dof).sqrt() })
}

/// Householder least squares. Returns the coefficients and `R^{-1}`
/// (row-major), whose product with its transpose is the covariance.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64], k: usize) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = rhs.to_vec();
    // column scaling improves conditioning for the s·ln s column
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let m = (0..n).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    for row in a.iter_mut() {
        for j in 0..k {
            row[j] /= scale[j];
        }
    }
    for j in 0..k {
        let norm = (j..n).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        for c in j..k {
            let dotv: f64 = (j..n).map(|i| v[i - j] * a[i][c]).sum();
            let f = 2.0 * dotv / vn;
            for i in j..n {
                a[i][c] -= f * v[i - j];
            }
        }
        let dotb: f64 = (j..n).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dotb / vn;
        for i in j..n {
            b[i] -= f * v[i - j];
        }
    }
    let rmax = (0..k).map(|j| a[j][j].abs()).fold(0.0, f64::max);
    if (0..k).any(|j| a[j][j].abs() <= 1e-13 * rmax) {
        return None;
    }
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|c| a[j][c] * x[c]).sum();
        x[j] = (b[j] - s) / a[j][j];
    }
    // inverse of the upper triangular factor
    let mut rinv = vec![vec![0.0; k]; k];
    for j in 0..k {
        rinv[j][j] = 1.0 / a[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|m| a[i][m] * rinv[m][j]).sum();
            rinv[i][j] = -s / a[i][i];
        }
    }
    for j in 0..k {
        x[j] /= scale[j];
        for c in 0..k {
            rinv[j][c] /= scale[j];
        }
    }
    Some((x, rinv))
}
