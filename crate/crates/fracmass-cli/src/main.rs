//! `fracmass`: declarative experiments over the fracmass library.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when `verify` finds a
//! failing criterion.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, ExperimentConfig, Quantity};
use run::Status;

/// Environment variable supplying the default worker count.
const THREADS_ENV: &str = "FRACMASS_THREADS";

#[derive(Parser)]
#[command(name = "fracmass", version, about = "Localized fractional seminorms, masses at infinity and their s → 0 limits")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Mass at infinity α_p(f), analytic and extrapolated.
    Alpha(Common),
    /// Gagliardo seminorm over pairs touching Ω at one s.
    Seminorm(Common),
    /// Fractional perimeter of E relative to Ω at one s.
    Perimeter(Common),
    /// Closed-form s → 0 limits.
    Limit(Common),
    /// Both sides of the fractional Hardy inequality.
    Hardy(Common),
    /// Gaussian perimeter limit with its oracles.
    Gauss(Common),
    /// Extrapolated s-sweep of one quantity; writes CSV with --csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        quantity: Option<Quantity>,
    },
    /// Runs the acceptance suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Criterion ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// Runs the command named in the config file.
    Run(Common),
}

/// Flags overriding config fields.
#[derive(Args, Default)]
struct Common {
    /// TOML or JSON experiment file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    s_grid: Vec<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batches: Option<u32>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads; defaults to $FRACMASS_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn apply(self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => { $( if let Some(v) = self.$src { $dst = Some(v); } )* };
        }
        set!(
            dim => cfg.dim,
            p => cfg.p,
            s => cfg.s,
            radius => cfg.radius,
            delta => cfg.delta,
            samples => cfg.quadrature.sample_budget,
            seed => cfg.quadrature.rng_seed,
            batches => cfg.quadrature.batch_count,
            json => cfg.output.json,
            csv => cfg.output.csv,
            threads => cfg.threads,
        );
        if !self.s_grid.is_empty() {
            cfg.s_grid = Some(self.s_grid);
        }
    }
}

fn prepare(cli: Cli) -> anyhow::Result<(Command, ExperimentConfig)> {
    let (command, common, extra): (Option<Command>, Common, Box<dyn FnOnce(&mut ExperimentConfig)>) = match cli.command {
        Sub::Alpha(c) => (Some(Command::Alpha), c, Box::new(|_| {})),
        Sub::Seminorm(c) => (Some(Command::Seminorm), c, Box::new(|_| {})),
        Sub::Perimeter(c) => (Some(Command::Perimeter), c, Box::new(|_| {})),
        Sub::Limit(c) => (Some(Command::Limit), c, Box::new(|_| {})),
        Sub::Hardy(c) => (Some(Command::Hardy), c, Box::new(|_| {})),
        Sub::Gauss(c) => (Some(Command::Gauss), c, Box::new(|_| {})),
        Sub::Sweep { common, quantity } => (
            Some(Command::Sweep),
            common,
            Box::new(move |cfg: &mut ExperimentConfig| {
                if quantity.is_some() {
                    cfg.quantity = quantity;
                }
            }),
        ),
        Sub::Verify { common, only } => (
            Some(Command::Verify),
            common,
            Box::new(move |cfg: &mut ExperimentConfig| {
                if !only.is_empty() {
                    cfg.only = Some(only);
                }
            }),
        ),
        Sub::Run(c) => (None, c, Box::new(|_| {})),
    };
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cfg.threads.is_none() {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            let n = v
                .parse()
                .map_err(|_| config::InputError(format!("{THREADS_ENV}: expected a thread count, got `{v}`")))?;
            cfg.threads = Some(n);
        }
    }
    common.apply(&mut cfg);
    extra(&mut cfg);
    let command = command
        .or(cfg.command)
        .ok_or_else(|| config::InputError("`run` needs a config with a `command` key".into()))?;
    Ok((command, cfg))
}

fn exit_code(result: &anyhow::Result<Status>) -> u8 {
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::ToleranceFailure) => 2,
        Err(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = prepare(cli).and_then(|(command, cfg)| run::run(command, &cfg));
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_code(&result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(Status::Ok)), 0);
        assert_eq!(exit_code(&Ok(Status::ToleranceFailure)), 2);
        assert_eq!(exit_code(&Err(anyhow::anyhow!("bad"))), 1);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::parse_from(["fracmass", "sweep", "--quantity", "alpha", "--p", "3", "--s-grid", "0.1,0.01,0.001,0.0001,0.00001"]);
        let (command, cfg) = prepare(cli).unwrap();
        assert_eq!(command, Command::Sweep);
        assert_eq!(cfg.p, Some(3));
        assert_eq!(cfg.quantity, Some(Quantity::Alpha));
        assert_eq!(cfg.s_grid.as_ref().map(Vec::len), Some(5));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
