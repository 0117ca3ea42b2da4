//! Population size estimation from dual-record-system data.
//!
//! Two listing operations over one closed population leave a 2x2 table
//! with the never-captured cell missing. This crate estimates the
//! population size `N` under time variation alone (closed-form MLE) and
//! under an added behavioral response effect, where recapture
//! probability differs from first-capture probability by a factor
//! `phi`. The behavioral model is not identified by the observed cells,
//! so estimation runs through Gibbs samplers over the missing cell and
//! the model rates:
//!
//! * data augmentation (`estimators::run_da`) — fully Bayesian;
//! * EM-within-Gibbs (`estimators::run_ewig1`, `estimators::run_ewig2`)
//!   — empirical Bayes with point-estimated nuisance parameters;
//! * stochastic EM-within-Gibbs (`estimators::run_semwig`) — the
//!   single-imputation variant.
//!
//! Supporting pieces: exact conditional samplers over deterministic
//! random streams ([`samplers`], [`rng`]), multi-chain scale-reduction
//! diagnostics and burn-in selection ([`diagnostics`]), and a
//! replication-study harness with built-in benchmark populations
//! ([`simulation`]).

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod model;
#[cfg(feature = "test-oracles")]
pub mod oracles;
pub mod rng;
pub mod samplers;
pub mod simulation;

pub use error::{DrsError, Result};
pub use model::{cell_probs, loglik_mt, mt_mle, p_from_marginals, CellProbs, DrsTable, MtEstimate, MtbParams};
pub use rng::{streams, RandomSource};
pub use samplers::PhiPrior;

pub use estimators::{
    run_da, run_estimate, run_ewig1, run_ewig2, run_semwig, ChainSet, ChainTrace,
    DirectionalKnowledge, EstimateOutput, EwigResult, Method, MethodConfig, Warning,
};

pub use diagnostics::{psrf_sqrt, select_burnin, summarize, Summary};
pub use simulation::{
    builtin_population, builtin_populations, expected_x0, generate_dataset, run_study,
    PopulationSpec, StudyResult,
};
