//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by table validation, samplers, estimators and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DrsError {
    /// A cell count was negative.
    #[error("negative count: {field} = {value}")]
    NegativeCount { field: &'static str, value: i64 },

    /// All observed cells are zero; nothing was captured.
    #[error("empty table: no individual was observed in either list")]
    EmptyTable,

    /// `x11 = 0`; the dual-record closed-form estimator is undefined.
    #[error("zero overlap: x11 = 0 leaves the estimator undefined")]
    ZeroOverlap,

    /// A parameter landed outside its support.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested marginals cannot be realized by any valid cell layout.
    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    /// The rejection envelope detected a non-log-concave evaluation.
    /// This signals a bug in the target density, never an expected state.
    #[error("rejection envelope failure: {0}")]
    EnvelopeFailure(String),

    /// The prior interval intersected with the support carries no mass.
    #[error("empty truncation: [{lo}, {hi}] carries no mass at p = {p}")]
    EmptyTruncation { lo: f64, hi: f64, p: f64 },

    /// The convergence threshold was never met within the iteration budget.
    #[error("no convergence: sqrt-Rhat stayed >= {threshold} through {max_iters} iterations")]
    NoConvergence { threshold: f64, max_iters: usize },

    /// A maximization step found no usable interior maximum.
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    /// Every chain is constant; the scale-reduction factor is undefined.
    #[error("zero within-chain variance: all chains constant")]
    ZeroWithinVariance,

    /// An operation that needs draws received none.
    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, DrsError>;
