//! `drs diagnose`: recompute scale-reduction diagnostics and summaries
//! from a saved trace.

use crate::io::read_trace;
use crate::report::{Checkpoint, DiagnoseReport, SummaryReport};
use crate::{CliError, DiagnoseArgs};
use drs_core::diagnostics::{psrf_sqrt_prefix, select_burnin, summarize};
use std::fs;

pub fn run(args: DiagnoseArgs) -> Result<(), CliError> {
    let chains = read_trace(&args.trace)?;
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    let interval = args.check_interval.max(1);

    let mut checkpoints = Vec::new();
    let mut h = interval;
    while h <= len {
        if let Ok(r) = psrf_sqrt_prefix(&chains, h) {
            checkpoints.push(Checkpoint {
                h: h as u64,
                sqrt_rhat: r,
            });
        }
        h += interval;
    }

    let burn_in = select_burnin(&chains, args.threshold, interval).ok();
    let converged = burn_in.is_some();
    // Same retention rule as the engines: a window of the burn-in
    // length, capped by what the trace holds.
    let (lo, hi) = match burn_in {
        Some(h) => (h, (2 * h).min(len)),
        None => (len / 2, len),
    };
    let mut retained = Vec::new();
    for chain in &chains {
        retained.extend_from_slice(&chain[lo..hi.min(chain.len())]);
    }
    let summary = summarize(&retained, args.ci)?;

    let report = DiagnoseReport {
        chains: chains.len() as u64,
        iterations: len as u64,
        burn_in: burn_in.map(|h| h as u64),
        converged,
        n: SummaryReport::from(summary),
        checkpoints,
    };
    let text = toml::to_string_pretty(&report)
        .map_err(|e| CliError::failure(format!("report serialization: {e}")))?;
    match &args.out {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }

    if !converged {
        return Err(CliError::convergence(String::new()));
    }
    Ok(())
}
