//! `drs estimate`: run one estimator over a table file and write the
//! run report, optionally with the iteration trace.

use crate::io::{read_tables, write_trace};
use crate::report::{render_reports, RunReport};
use crate::{prior_label, CliError, EstimateArgs};
use drs_core::{mt_mle, run_estimate, streams, RandomSource, Warning};
use std::fs;

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    if !(args.ci > 0.0 && args.ci < 1.0) {
        return Err(CliError::validation(format!(
            "--ci {} outside (0, 1)",
            args.ci
        )));
    }
    let tables = read_tables(&args.input)?;
    if args.trace.is_some() && tables.len() > 1 {
        return Err(CliError::validation(
            "--trace needs a single-table input".to_string(),
        ));
    }

    let mut reports = Vec::with_capacity(tables.len());
    let mut unconverged = false;
    for (idx, named) in tables.iter().enumerate() {
        let report = match args.engine.method.engine() {
            None => RunReport::from_mt(named.label.clone(), args.seed, &mt_mle(&named.table)?),
            Some(method) => {
                let config = args.engine.to_config(method, args.seed)?;
                let base = RandomSource::new(args.seed, streams::replicate(idx as u32));
                let out = run_estimate(&named.table, &config, args.ci, &base)?;
                if let (Some(path), Some(set)) = (&args.trace, &out.chains) {
                    write_trace(path, set)?;
                }
                unconverged |= out.warnings.contains(&Warning::NoConvergence);
                RunReport::from_estimate(
                    named.label.clone(),
                    args.seed,
                    prior_label(args.engine.method, &config),
                    &out,
                )
            }
        };
        reports.push(report);
    }

    let text = render_reports(&reports)
        .map_err(|e| CliError::failure(format!("report serialization: {e}")))?;
    match &args.out {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }

    if unconverged {
        // The report is on disk with the flag; the exit code is the
        // failure channel.
        return Err(CliError::convergence(String::new()));
    }
    Ok(())
}
