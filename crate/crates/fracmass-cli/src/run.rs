//! Executes a validated configuration.

use std::path::Path;

use fracmass::acceptance::{run_selected, AcceptanceOptions, CriterionOutcome};
use fracmass::asymptotics::{default_grid, geometric_grid, sweep};
use fracmass::gausskernel::{closed_form_limit, dominated_limit, GaussPerimeterSeries};
use fracmass::limits::{f0_even_p, limit_report, perimeter_limit, CUBATURE_TOL};
use fracmass::mass::{alpha_analytic, alpha_numeric, alpha_translated};
use fracmass::seminorm::{default_radius, fractional_perimeter, gagliardo_qomega, hardy_pair, SeminormBreakdown};
use fracmass::{EstimateWithError, QuadratureSpec, Region, ScalarField};
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, Quantity};
use crate::report::{write_csv, write_json, Comparison, Inputs, Report, SweepReport};

/// Outcome of a run that completed without an input error.
pub enum Status {
    Ok,
    /// `verify` found failing criteria.
    ToleranceFailure,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    spec: QuadratureSpec,
    d: usize,
}

impl Ctx<'_> {
    fn field(&self) -> &ScalarField {
        self.cfg.field.as_ref().expect("validated")
    }
    fn omega(&self) -> &Region {
        self.cfg.omega.as_ref().expect("validated")
    }
    fn set(&self) -> &Region {
        self.cfg.set.as_ref().expect("validated")
    }
    fn s(&self) -> f64 {
        self.cfg.s.expect("validated")
    }
    fn p(&self, default: u32) -> u32 {
        self.cfg.p.unwrap_or(default)
    }
    fn grid(&self, default: Vec<f64>) -> Vec<f64> {
        self.cfg.s_grid.clone().unwrap_or(default)
    }
}

/// Closed-form cubature value with its requested tolerance as the bound.
fn cubature(v: f64) -> EstimateWithError {
    EstimateWithError::analytic(v, CUBATURE_TOL * v.abs())
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> anyhow::Result<Status> {
    cfg.validate(command)?;
    if let Some(n) = cfg.threads {
        // A pool may already exist when several runs share a process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let spec = cfg.quadrature_spec();
    if command == Command::Verify {
        return verify(cfg, spec);
    }
    let ctx = Ctx { cfg, spec, d: cfg.dim.expect("validated") };
    let json = cfg.output.json.as_deref();
    let csv = cfg.output.csv.as_deref();
    let inputs = Inputs { config: cfg, resolved_quadrature: spec };
    match command {
        Command::Alpha => emit(command, inputs, alpha(&ctx)?, json, csv),
        Command::Seminorm => emit(command, inputs, seminorm(&ctx)?, json, csv),
        Command::Perimeter => emit(command, inputs, perimeter(&ctx)?, json, csv),
        Command::Limit => emit(command, inputs, limit(&ctx)?, json, csv),
        Command::Hardy => emit(command, inputs, hardy(&ctx)?, json, csv),
        Command::Gauss => emit(command, inputs, gauss(&ctx)?, json, csv),
        Command::Sweep => emit(command, inputs, sweep_quantity(&ctx)?, json, csv),
        Command::Verify => unreachable!(),
    }?;
    Ok(Status::Ok)
}

trait HasSweep {
    fn sweep(&self) -> Option<&SweepReport> {
        None
    }
}

fn emit<T: Serialize + HasSweep>(
    command: Command,
    inputs: Inputs<'_>,
    results: T,
    json: Option<&Path>,
    csv: Option<&Path>,
) -> anyhow::Result<()> {
    if let Some(path) = csv {
        match results.sweep() {
            Some(s) => write_csv(&s.points, path)?,
            None => return Err(crate::config::InputError(format!("`{command}` produces no sweep to write as CSV")).into()),
        }
    }
    write_json(&Report { command, inputs, results }, json)
}

#[derive(Serialize)]
struct AlphaResults {
    analytic: Option<EstimateWithError>,
    analytic_unavailable: Option<String>,
    numeric: SweepReport,
    comparison: Option<Comparison>,
}

impl HasSweep for AlphaResults {
    fn sweep(&self) -> Option<&SweepReport> {
        Some(&self.numeric)
    }
}

fn alpha(ctx: &Ctx) -> anyhow::Result<AlphaResults> {
    let (f, p) = (ctx.field(), ctx.p(1));
    let (analytic, analytic_unavailable) = match alpha_analytic(f, p, ctx.d) {
        Ok(m) => (Some(EstimateWithError::analytic(m.value, m.error)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let grid = ctx.grid(default_grid());
    let numeric: SweepReport = alpha_numeric(f, p, ctx.d, &grid, ctx.cfg.radius.unwrap_or(1.0), &ctx.spec)?.into();
    let comparison = analytic.map(|a| Comparison::new("analytic", numeric.limit, a));
    Ok(AlphaResults { analytic, analytic_unavailable, numeric, comparison })
}

#[derive(Serialize)]
struct SeminormResults {
    breakdown: SeminormBreakdown,
    /// `(s/2)·total`.
    half_scaled: EstimateWithError,
}

impl HasSweep for SeminormResults {}

fn seminorm(ctx: &Ctx) -> anyhow::Result<SeminormResults> {
    let (f, omega, s) = (ctx.field(), ctx.omega(), ctx.s());
    let radius = match ctx.cfg.radius {
        Some(r) => r,
        None => default_radius(f, omega)?,
    };
    let breakdown = gagliardo_qomega(f, omega, ctx.d, s, ctx.p(2), radius, &ctx.spec)?;
    let half_scaled = breakdown.total.scale(s / 2.0);
    Ok(SeminormResults { breakdown, half_scaled })
}

#[derive(Serialize)]
struct PerimeterResults {
    perimeter: EstimateWithError,
    /// `(s/2)·Per_s`, comparable with `limit`.
    half_scaled: EstimateWithError,
    limit: EstimateWithError,
}

impl HasSweep for PerimeterResults {}

fn perimeter_radius(ctx: &Ctx) -> anyhow::Result<f64> {
    Ok(match ctx.cfg.radius {
        Some(r) => r,
        None => default_radius(&ScalarField::Indicator(ctx.set().clone()), ctx.omega())?,
    })
}

fn perimeter(ctx: &Ctx) -> anyhow::Result<PerimeterResults> {
    let (e, omega, s) = (ctx.set(), ctx.omega(), ctx.s());
    let per = fractional_perimeter(e, omega, ctx.d, s, perimeter_radius(ctx)?, &ctx.spec)?;
    let limit = cubature(perimeter_limit(e, omega, ctx.d)?);
    Ok(PerimeterResults { perimeter: per, half_scaled: per.scale(s / 2.0), limit })
}

#[derive(Serialize)]
struct EvenP {
    p: u32,
    value: EstimateWithError,
}

#[derive(Serialize)]
struct LimitResults {
    f0_binomial: Option<EstimateWithError>,
    interaction_energy: Option<EstimateWithError>,
    perimeter_limit: Option<EstimateWithError>,
    critical_alpha: Option<EstimateWithError>,
    even_p: Option<EvenP>,
    consistency_deltas: Vec<(String, f64)>,
}

impl HasSweep for LimitResults {}

fn limit(ctx: &Ctx) -> anyhow::Result<LimitResults> {
    let (f, omega) = (ctx.field(), ctx.omega());
    let r = limit_report(f, omega, ctx.d)?;
    let even_p = match ctx.cfg.p {
        Some(p) if p != 2 => Some(EvenP { p, value: cubature(f0_even_p(f, omega, p, ctx.d)?) }),
        _ => None,
    };
    Ok(LimitResults {
        f0_binomial: r.f0_binomial.map(cubature),
        interaction_energy: r.interaction_energy.map(cubature),
        perimeter_limit: r.perimeter_limit.map(cubature),
        critical_alpha: r.critical_alpha.map(cubature),
        even_p,
        consistency_deltas: r.consistency_deltas,
    })
}

#[derive(Serialize)]
struct HardyResults {
    lhs: EstimateWithError,
    rhs: EstimateWithError,
    /// `rhs − lhs`.
    margin: EstimateWithError,
    holds: bool,
}

impl HasSweep for HardyResults {}

fn hardy(ctx: &Ctx) -> anyhow::Result<HardyResults> {
    let delta = ctx.cfg.delta.unwrap_or(0.5);
    let (lhs, rhs) = hardy_pair(ctx.field(), ctx.omega(), ctx.s(), delta, ctx.d, &ctx.spec)?;
    let margin = rhs.add(lhs.scale(-1.0));
    Ok(HardyResults { lhs, rhs, margin, holds: margin.value > 0.0 })
}

#[derive(Serialize)]
struct GaussResults {
    /// `lim s·P^γ_s` from the tabulated series.
    limit: EstimateWithError,
    closed_form: EstimateWithError,
    dominated: EstimateWithError,
    comparisons: Vec<Comparison>,
    /// `s·P^γ_s` and `P^γ_s` when `s` is given.
    scaled_at_s: Option<EstimateWithError>,
    perimeter_at_s: Option<EstimateWithError>,
}

impl HasSweep for GaussResults {}

fn gauss(ctx: &Ctx) -> anyhow::Result<GaussResults> {
    let (e, omega) = (ctx.set(), ctx.omega());
    let series = GaussPerimeterSeries::new(e, omega, ctx.d, &ctx.spec)?;
    let limit = series.limit();
    let closed_form = closed_form_limit(e, omega, ctx.d)?;
    // Independent stream, so the Monte Carlo oracle does not share samples
    // with the series.
    let oracle_spec = ctx.spec.with_seed(ctx.spec.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let dominated = dominated_limit(e, omega, ctx.d, &oracle_spec)?;
    let (scaled_at_s, perimeter_at_s) = match ctx.cfg.s {
        Some(s) => {
            let v = series.scaled(s)?;
            (Some(v), Some(v.scale(1.0 / s)))
        }
        None => (None, None),
    };
    let comparisons = vec![Comparison::new("closed_form", limit, closed_form), Comparison::new("dominated", limit, dominated)];
    Ok(GaussResults { limit, closed_form, dominated, comparisons, scaled_at_s, perimeter_at_s })
}

#[derive(Serialize)]
struct SweepResults {
    quantity: Quantity,
    sweep: SweepReport,
    comparison: Option<Comparison>,
}

impl HasSweep for SweepResults {
    fn sweep(&self) -> Option<&SweepReport> {
        Some(&self.sweep)
    }
}

fn sweep_quantity(ctx: &Ctx) -> anyhow::Result<SweepResults> {
    let quantity = ctx.cfg.quantity.expect("validated");
    let d = ctx.d;
    let spec = &ctx.spec;
    let (result, oracle) = match quantity {
        Quantity::Alpha => {
            let (f, p) = (ctx.field(), ctx.p(1));
            let radius = ctx.cfg.radius.unwrap_or(1.0);
            let origin = vec![0.0; d];
            let r = sweep(|s| alpha_translated(f, p, d, &origin, radius, s, spec), &ctx.grid(default_grid()))?;
            let oracle = alpha_analytic(f, p, d).ok().map(|m| ("analytic", EstimateWithError::analytic(m.value, m.error)));
            (r, oracle)
        }
        Quantity::Seminorm => {
            let (f, omega, p) = (ctx.field(), ctx.omega(), ctx.p(2));
            let radius = match ctx.cfg.radius {
                Some(r) => r,
                None => default_radius(f, omega)?,
            };
            let grid = ctx.grid(geometric_grid(1e-2, 1e-4, 5));
            let r = sweep(|s| Ok(gagliardo_qomega(f, omega, d, s, p, radius, spec)?.total.scale(s / 2.0)), &grid)?;
            let oracle = if p % 2 == 0 { f0_even_p(f, omega, p, d).ok().map(|v| ("binomial", cubature(v))) } else { None };
            (r, oracle)
        }
        Quantity::Perimeter => {
            let (e, omega) = (ctx.set(), ctx.omega());
            let radius = perimeter_radius(ctx)?;
            let grid = ctx.grid(geometric_grid(1e-2, 1e-4, 5));
            let r = sweep(|s| Ok(fractional_perimeter(e, omega, d, s, radius, spec)?.scale(s / 2.0)), &grid)?;
            (r, Some(("perimeter_limit", cubature(perimeter_limit(e, omega, d)?))))
        }
        Quantity::Gauss => {
            let (e, omega) = (ctx.set(), ctx.omega());
            let series = GaussPerimeterSeries::new(e, omega, d, spec)?;
            let r = sweep(|s| series.scaled(s), &ctx.grid(geometric_grid(1e-2, 1e-4, 5)))?;
            (r, Some(("closed_form", closed_form_limit(e, omega, d)?)))
        }
    };
    let sweep: SweepReport = result.into();
    let comparison = oracle.map(|(name, o)| Comparison::new(name, sweep.limit, o));
    Ok(SweepResults { quantity, sweep, comparison })
}

#[derive(Serialize)]
struct VerifyReport {
    passed: usize,
    failed: usize,
    criteria: Vec<CriterionOutcome>,
}

fn verify(cfg: &ExperimentConfig, spec: QuadratureSpec) -> anyhow::Result<Status> {
    let opts = AcceptanceOptions {
        samples: cfg.quadrature.sample_budget.unwrap_or(AcceptanceOptions::default().samples),
        seed: spec.rng_seed,
    };
    let ids = cfg.only.clone().unwrap_or_default();
    let outcomes = run_selected(&ids, &opts);
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let failed = outcomes.len() - passed;
    println!("acceptance: {passed} passed, {failed} failed");
    if let Some(path) = cfg.output.json.as_deref() {
        write_json(&VerifyReport { passed, failed, criteria: outcomes }, Some(path))?;
    }
    Ok(if failed == 0 { Status::Ok } else { Status::ToleranceFailure })
}
