//! `drs simulate`: replication study on one population, one method.

use crate::io::{study_row, STUDY_HEADER};
use crate::{prior_label, CliError, SimulateArgs};
use drs_core::{builtin_population, run_study, PopulationSpec};
use std::fs;

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let spec = resolve_spec(&args)?;
    let method = args
        .engine
        .method
        .engine()
        .ok_or_else(|| CliError::validation("method mt has no sampling study; pick an engine".into()))?;
    let config = args.engine.to_config(method, args.seed)?;
    let result = run_study(&spec, &config, args.reps, args.workers)?;

    let mut text = String::from(STUDY_HEADER);
    text.push('\n');
    text.push_str(&study_row(
        &spec.name,
        &config.method.to_string(),
        &prior_label(args.engine.method, &config),
        &result,
    ));
    text.push('\n');
    fs::write(&args.out, text)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.out.display())))?;
    println!("{}", args.out.display());
    Ok(())
}

fn resolve_spec(args: &SimulateArgs) -> Result<PopulationSpec, CliError> {
    if let Some(name) = &args.pop {
        return builtin_population(name)
            .ok_or_else(|| CliError::validation(format!("unknown population {name:?}")));
    }
    match (args.n_true, args.phi, args.p1, args.p_dot1) {
        (Some(n), Some(phi), Some(p1), Some(p_dot1)) => {
            Ok(PopulationSpec::custom("custom", n, phi, p1, p_dot1))
        }
        _ => Err(CliError::validation(
            "specify --pop or all of --n-true --phi --p1 --p-dot1".to_string(),
        )),
    }
}
