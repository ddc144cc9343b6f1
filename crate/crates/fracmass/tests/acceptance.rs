//! Runs every acceptance criterion and prints one line per criterion.
//!
//! Positional numeric arguments restrict the run to those criteria.
//! `FRACMASS_ACCEPTANCE_SAMPLES` overrides the Monte Carlo budget.

use std::process::ExitCode;

use fracmass::acceptance::{run_selected, AcceptanceOptions};

fn main() -> ExitCode {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut opts = AcceptanceOptions::default();
    if let Some(n) = std::env::var("FRACMASS_ACCEPTANCE_SAMPLES").ok().and_then(|v| v.parse().ok()) {
        opts.samples = n;
    }
    let outcomes = run_selected(&ids, &opts);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
