//! Experiment configuration: file loading, flag overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fracmass::{QuadratureSpec, Region, ScalarField};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Alpha,
    Seminorm,
    Perimeter,
    Limit,
    Hardy,
    Gauss,
    Sweep,
    Verify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default().as_str())
    }
}

/// What a `sweep` extrapolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `s·∫_{B_R^c} f|y|^{-(d+sp)}`, tending to `α_p(f)`.
    Alpha,
    /// `(s/2)·[f]^p_{W^{s,p}(Q_Ω)}`.
    Seminorm,
    /// `(s/2)·Per_s(E, Ω)`.
    Perimeter,
    /// `s·P^γ_s(E, Ω)`.
    Gauss,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    pub sample_budget: Option<u64>,
    pub rng_seed: Option<u64>,
    pub target_rel_error: Option<f64>,
    pub batch_count: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// The declarative document read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub dim: Option<usize>,
    pub field: Option<ScalarField>,
    pub omega: Option<Region>,
    /// The set `E` for perimeters.
    pub set: Option<Region>,
    pub p: Option<u32>,
    pub s: Option<f64>,
    pub s_grid: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub delta: Option<f64>,
    pub quantity: Option<Quantity>,
    /// Criterion ids for `verify`; empty runs all.
    pub only: Option<Vec<u8>>,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub threads: Option<usize>,
}

/// A user-facing input error; maps to exit code 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Schema errors
    /// name the offending path.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, is_json).map_err(|e| input_err(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        let located = |path: String, msg: String| {
            if path == "." {
                msg
            } else {
                format!("at `{path}`: {msg}")
            }
        };
        if json {
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            serde_path_to_error::deserialize(value).map_err(|e| located(e.path().to_string(), e.inner().to_string()))
        } else {
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_owned())?;
            serde_path_to_error::deserialize(table).map_err(|e| located(e.path().to_string(), e.inner().message().to_owned()))
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let base = QuadratureSpec::default();
        let q = &self.quadrature;
        QuadratureSpec {
            sample_budget: q.sample_budget.unwrap_or(base.sample_budget),
            rng_seed: q.rng_seed.unwrap_or(base.rng_seed),
            target_rel_error: q.target_rel_error.unwrap_or(base.target_rel_error),
            batch_count: q.batch_count.unwrap_or(base.batch_count),
        }
    }

    /// Checks every field needed by `command` before any computation.
    pub fn validate(&self, command: Command) -> anyhow::Result<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(input_err(format!("config declares command `{c}` but `{command}` was requested")));
            }
        }
        check_s(self.s, "s")?;
        for (i, &s) in self.s_grid.iter().flatten().enumerate() {
            check_s(Some(s), &format!("s_grid[{i}]"))?;
        }
        if let Some(g) = &self.s_grid {
            if g.len() < 5 {
                return Err(input_err("s_grid: extrapolation needs at least 5 points"));
            }
        }
        if self.p == Some(0) {
            return Err(input_err("p: must be at least 1"));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(input_err("radius: must be positive"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(input_err("delta: must lie in (0,1)"));
            }
        }
        if self.threads == Some(0) {
            return Err(input_err("threads: must be at least 1"));
        }
        self.quadrature_spec().validate().map_err(|e| input_err(format!("quadrature: {e}")))?;
        if command == Command::Verify {
            if let Some(bad) = self.only.iter().flatten().find(|&&id| !(1..=14).contains(&id)) {
                return Err(input_err(format!("only: no criterion {bad}; ids run from 1 to 14")));
            }
            return Ok(());
        }

        let quantity = self.quantity;
        if command == Command::Sweep && quantity.is_none() {
            return Err(input_err("missing `quantity` (required by sweep)"));
        }
        let d = self.require(self.dim, "dim", command)?;
        if !(1..=3).contains(&d) {
            return Err(input_err(format!("dim: unsupported dimension {d}; supported: 1, 2, 3")));
        }
        let needs_field = matches!(command, Command::Alpha | Command::Seminorm | Command::Limit | Command::Hardy)
            || matches!(quantity, Some(Quantity::Alpha | Quantity::Seminorm)) && command == Command::Sweep;
        let needs_set = matches!(command, Command::Perimeter | Command::Gauss)
            || matches!(quantity, Some(Quantity::Perimeter | Quantity::Gauss)) && command == Command::Sweep;
        let needs_omega = command != Command::Alpha && !(command == Command::Sweep && quantity == Some(Quantity::Alpha));
        if needs_field {
            let f = self.require(self.field.as_ref(), "field", command)?;
            f.validate(d).map_err(|e| input_err(format!("field: {e}")))?;
        }
        if needs_set {
            let e = self.require(self.set.as_ref(), "set", command)?;
            e.validate(d).map_err(|e| input_err(format!("set: {e}")))?;
        }
        if needs_omega {
            let o = self.require(self.omega.as_ref(), "omega", command)?;
            o.validate(d).map_err(|e| input_err(format!("omega: {e}")))?;
        }
        if matches!(command, Command::Seminorm | Command::Perimeter | Command::Hardy) {
            self.require(self.s, "s", command)?;
        }
        Ok(())
    }

    fn require<T>(&self, v: Option<T>, key: &str, command: Command) -> anyhow::Result<T> {
        v.ok_or_else(|| input_err(format!("missing `{key}` (required by {command})")))
    }
}

fn check_s(s: Option<f64>, key: &str) -> anyhow::Result<()> {
    match s {
        Some(s) if !(s > 0.0 && s < 1.0) => Err(input_err(format!("{key}: s out of (0,1) (got {s})"))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = ExperimentConfig::parse("dim = 2\n[quadrature]\nsamples = 3\n", false).unwrap_err();
        assert!(err.contains("quadrature") && err.contains("samples"), "{err}");
        let err = ExperimentConfig::parse(r#"{"omega": {"ball": {"centre": [0, 0], "radius": 1}}}"#, true).unwrap_err();
        assert!(err.contains("omega.ball") && err.contains("centre"), "{err}");
    }

    #[test]
    fn toml_and_json_agree() {
        let t = ExperimentConfig::parse(
            "dim = 2\ns = 0.25\nfield = { indicator = { half_space = { normal = [1.0, 0.0], offset = 0.0 } } }\n",
            false,
        )
        .unwrap();
        let j = ExperimentConfig::parse(
            r#"{"dim": 2, "s": 0.25, "field": {"indicator": {"half_space": {"normal": [1.0, 0.0], "offset": 0.0}}}}"#,
            true,
        )
        .unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn validation_names_the_problem() {
        let c = ExperimentConfig { s: Some(1.5), dim: Some(2), ..Default::default() };
        assert!(c.validate(Command::Seminorm).unwrap_err().to_string().contains("s out of (0,1)"));
        let c = ExperimentConfig { s: Some(0.5), dim: Some(2), ..Default::default() };
        assert!(c.validate(Command::Seminorm).unwrap_err().to_string().contains("missing `field`"));
        let c = ExperimentConfig { only: Some(vec![15]), ..Default::default() };
        assert!(c.validate(Command::Verify).is_err());
    }
}
