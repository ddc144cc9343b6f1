//! JSON and CSV report types.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use fracmass::asymptotics::{FitModel, SSweepResult, SweepPoint};
use fracmass::{ErrorKind, EstimateWithError};
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};

#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: Command,
    pub inputs: Inputs<'a>,
    pub results: T,
}

/// The configuration as resolved after overrides, with the full
/// quadrature spec spelled out.
#[derive(Debug, Serialize)]
pub struct Inputs<'a> {
    #[serde(flatten)]
    pub config: &'a ExperimentConfig,
    pub resolved_quadrature: fracmass::QuadratureSpec,
}

/// An extrapolated sweep with the limit carrying its own error kind.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub limit: EstimateWithError,
    pub fit_model: FitModel,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub no_clean_limit: bool,
}

impl From<SSweepResult> for SweepReport {
    fn from(r: SSweepResult) -> Self {
        let kind = r.points.iter().map(|p| p.estimate.error_kind).max().unwrap_or(ErrorKind::Exact);
        let limit = match kind {
            ErrorKind::Statistical => EstimateWithError::statistical(r.limit, r.limit_error),
            _ => EstimateWithError::analytic(r.limit, r.limit_error),
        };
        SweepReport {
            points: r.points,
            limit,
            fit_model: r.fit_model,
            coefficients: r.coefficients,
            residual: r.residual,
            no_clean_limit: r.no_clean_limit,
        }
    }
}

/// A computed value next to an independent target.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub oracle_name: &'static str,
    pub oracle: EstimateWithError,
    /// `computed − oracle`.
    pub deviation: EstimateWithError,
    pub relative_deviation: f64,
}

impl Comparison {
    pub fn new(oracle_name: &'static str, computed: EstimateWithError, oracle: EstimateWithError) -> Self {
        let deviation = computed.add(oracle.scale(-1.0));
        let relative_deviation = if oracle.value != 0.0 { deviation.value / oracle.value.abs() } else { deviation.value };
        Self { oracle_name, oracle, deviation, relative_deviation }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Rows `s, value, error, error_kind`.
pub fn write_csv(points: &[SweepPoint], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["s", "value", "error", "error_kind"])?;
    for p in points {
        w.write_record([
            p.s.to_string(),
            p.estimate.value.to_string(),
            p.estimate.error.to_string(),
            p.estimate.error_kind.as_str().to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
