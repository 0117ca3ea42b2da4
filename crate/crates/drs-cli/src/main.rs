//! `drs` — population size estimation from dual-record-system data.
//!
//! Subcommands: `estimate` a user table, `simulate` a replication study
//! on a built-in or custom population, `reproduce` the benchmark
//! tables, and `diagnose` a saved trace. Every command honors `--seed`
//! (env `DRS_SEED` as fallback) and produces byte-identical output for
//! identical seeds; failures are classified solely through exit codes
//! (2 validation, 3 no convergence, 4 sampler or optimizer failure).

mod commands;
mod io;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drs_core::{DirectionalKnowledge, DrsError, Method, MethodConfig, PhiPrior};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn convergence(message: String) -> Self {
        Self { code: 3, message }
    }

    pub fn failure(message: String) -> Self {
        Self { code: 4, message }
    }
}

impl From<DrsError> for CliError {
    fn from(e: DrsError) -> Self {
        let code = match &e {
            DrsError::NegativeCount { .. }
            | DrsError::EmptyTable
            | DrsError::ZeroOverlap
            | DrsError::Domain(_)
            | DrsError::InfeasibleMarginals(_) => 2,
            DrsError::NoConvergence { .. } => 3,
            DrsError::EnvelopeFailure(_)
            | DrsError::EmptyTruncation { .. }
            | DrsError::OptimizerFailure(_)
            | DrsError::ZeroWithinVariance
            | DrsError::EmptySample => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "drs", version, about = "Population size estimation from two-list capture data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate population size from a table file
    Estimate(EstimateArgs),
    /// Run a replication study on one population
    Simulate(SimulateArgs),
    /// Reproduce a benchmark table (2-6)
    Reproduce(ReproduceArgs),
    /// Recompute convergence diagnostics from a saved trace
    Diagnose(DiagnoseArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Closed-form independence estimator
    Mt,
    /// Data augmentation (fully Bayesian)
    Da,
    /// EM-within-Gibbs, nuisance p
    Ewig1,
    /// EM-within-Gibbs, nuisance (p, phi)
    Ewig2,
    /// Stochastic EM-within-Gibbs
    Semwig,
}

impl MethodArg {
    fn engine(self) -> Option<Method> {
        match self {
            MethodArg::Mt => None,
            MethodArg::Da => Some(Method::Da),
            MethodArg::Ewig1 => Some(Method::Ewig1),
            MethodArg::Ewig2 => Some(Method::Ewig2),
            MethodArg::Semwig => Some(Method::Semwig),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KnowledgeArg {
    Prone,
    Averse,
    None,
}

impl From<KnowledgeArg> for DirectionalKnowledge {
    fn from(k: KnowledgeArg) -> Self {
        match k {
            KnowledgeArg::Prone => DirectionalKnowledge::Prone,
            KnowledgeArg::Averse => DirectionalKnowledge::Averse,
            KnowledgeArg::None => DirectionalKnowledge::None,
        }
    }
}

/// Engine tuning shared by `estimate` and `simulate`.
#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Estimation method
    #[arg(long, value_enum, default_value_t = MethodArg::Semwig)]
    pub method: MethodArg,
    /// Prior on the behavioral effect: `uniform:LO,HI` (HI may be
    /// `inf` for the live bound 1/p) or `gb1:U,V`
    #[arg(long)]
    pub phi_prior: Option<String>,
    /// Directional knowledge selecting the default prior bounds
    #[arg(long, value_enum, default_value_t = KnowledgeArg::None)]
    pub phi_knowledge: KnowledgeArg,
    /// Parallel chains for multi-chain methods
    #[arg(long, default_value_t = 5)]
    pub chains: usize,
    /// Inner Gibbs draws per maximization step (EWiG methods)
    #[arg(long, default_value_t = 500)]
    pub inner_samples: usize,
    /// Iteration cap; 0 keeps the method default
    #[arg(long, default_value_t = 0)]
    pub max_iters: usize,
    /// Checkpoint spacing for the convergence rule
    #[arg(long, default_value_t = 50)]
    pub check_interval: usize,
    /// Convergence threshold on the scale-reduction factor
    #[arg(long, default_value_t = 1.1)]
    pub rhat_threshold: f64,
    /// Retained draws after burn-in (default: the burn-in length)
    #[arg(long)]
    pub retain: Option<usize>,
}

impl EngineArgs {
    pub fn to_config(&self, method: Method, seed: u64) -> Result<MethodConfig, CliError> {
        let mut config = MethodConfig::new(method);
        config.seed = seed;
        config.chains = self.chains;
        config.inner_samples = self.inner_samples;
        if self.max_iters > 0 {
            config.max_outer_iters = self.max_iters;
        }
        config.check_interval = self.check_interval;
        config.rhat_threshold = self.rhat_threshold;
        config.knowledge = self.phi_knowledge.into();
        config.retain = self.retain;
        if let Some(spec) = &self.phi_prior {
            config.phi_prior = Some(parse_prior(spec)?);
        }
        Ok(config)
    }
}

fn parse_prior(spec: &str) -> Result<PhiPrior, CliError> {
    let bad = || CliError::validation(format!("bad --phi-prior {spec:?}; expected uniform:LO,HI or gb1:U,V"));
    let (family, params) = spec.split_once(':').ok_or_else(bad)?;
    let (a, b) = params.split_once(',').ok_or_else(bad)?;
    let parse_num = |s: &str| -> Result<f64, CliError> {
        if s.trim().eq_ignore_ascii_case("inf") {
            Ok(f64::INFINITY)
        } else {
            s.trim().parse::<f64>().map_err(|_| bad())
        }
    };
    let (a, b) = (parse_num(a)?, parse_num(b)?);
    let prior = match family.to_ascii_lowercase().as_str() {
        "uniform" | "u" => PhiPrior::flat(a, b),
        "gb1" => PhiPrior::gb1(a, b),
        _ => return Err(bad()),
    };
    prior.map_err(CliError::from)
}

/// Human-readable prior label for reports and study rows.
pub fn prior_label(method: MethodArg, config: &MethodConfig) -> String {
    match method {
        MethodArg::Mt => "none".to_string(),
        MethodArg::Ewig2 => match config.knowledge {
            DirectionalKnowledge::Prone => "phi>1".to_string(),
            DirectionalKnowledge::Averse => "phi<1".to_string(),
            DirectionalKnowledge::None => "phi>0".to_string(),
        },
        _ => match &config.phi_prior {
            Some(prior) => prior.to_string(),
            None => match config.knowledge {
                DirectionalKnowledge::Prone => "U(1, 1/p)".to_string(),
                DirectionalKnowledge::Averse => "U(c-hat, 1)".to_string(),
                DirectionalKnowledge::None => "GB-I(1, 1, p)".to_string(),
            },
        },
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Table file: TOML with x11/x10/x01 (or CSV with a header row)
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, env = "DRS_SEED", default_value_t = 1)]
    seed: u64,
    /// Credible level for posterior intervals
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
    /// Report destination (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the per-iteration trace (single-table runs only)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Built-in population name (P1-P8)
    #[arg(long)]
    pop: Option<String>,
    /// Custom population: true size
    #[arg(long)]
    n_true: Option<u64>,
    /// Custom population: behavioral effect
    #[arg(long)]
    phi: Option<f64>,
    /// Custom population: list-1 capture probability
    #[arg(long)]
    p1: Option<f64>,
    /// Custom population: list-2 marginal capture probability
    #[arg(long)]
    p_dot1: Option<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Replicates
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, env = "DRS_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Result file (delimited text)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Benchmark table id (2-6)
    table: u32,
    /// Replicates per cell (tables 3-6)
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, env = "DRS_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Trace file written by `estimate --trace`
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 50)]
    check_interval: usize,
    #[arg(long, default_value_t = 1.1)]
    threshold: f64,
    #[arg(long, default_value_t = 0.95)]
    ci: f64,
    /// Report destination (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Reproduce(args) => commands::reproduce::run(args),
        Command::Diagnose(args) => commands::diagnose::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_strings_parse() {
        assert!(matches!(
            parse_prior("uniform:1,2").unwrap(),
            PhiPrior::FlatUniform { lo, hi } if lo == 1.0 && hi == 2.0
        ));
        assert!(matches!(
            parse_prior("uniform:1,inf").unwrap(),
            PhiPrior::FlatUniform { hi, .. } if hi.is_infinite()
        ));
        assert!(matches!(
            parse_prior("gb1:1,1").unwrap(),
            PhiPrior::GenBetaOne { u, v } if u == 1.0 && v == 1.0
        ));
        assert!(parse_prior("nope:1,2").is_err());
        assert!(parse_prior("uniform:2,1").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
