//! The four estimation engines and their shared machinery.
//!
//! All engines iterate the sampler conditionals; they differ in which
//! parameters keep priors and which are point-estimated:
//!
//! * [`run_da`] — every unknown gets a prior; plain Gibbs over the four
//!   conditionals with multi-chain burn-in selection.
//! * [`run_ewig1`] — `p` is point-estimated by a Monte Carlo
//!   maximization step between Gibbs passes over `(N, p1, phi)`.
//! * [`run_ewig2`] — `(p, phi)` are point-estimated jointly; Gibbs runs
//!   over `(N, p1)` only.
//! * [`run_semwig`] — the single-imputation variant: one stochastic
//!   imputation per maximization step, with the nuisance estimate
//!   averaged over its stationary trace.

mod da;
mod density;
mod ewig;
mod semwig;

pub use da::run_da;
pub use density::{BetaMixture, NPosteriorMass};
pub use ewig::{m_step_p, run_ewig1, run_ewig2, EwigResult, MStep, PosteriorSample};
pub use semwig::run_semwig;

use crate::diagnostics::{self, Summary};
use crate::error::{DrsError, Result};
use crate::model::{mt_mle, DrsTable};
use crate::rng::{streams, RandomSource};
use crate::samplers::PhiPrior;
use std::fmt;

/// Keeps maximizers and clamped states this far inside open boundaries.
pub(crate) const BOUNDARY_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Da,
    Ewig1,
    Ewig2,
    Semwig,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Da => "da",
            Method::Ewig1 => "ewig1",
            Method::Ewig2 => "ewig2",
            Method::Semwig => "semwig",
        };
        f.write_str(name)
    }
}

/// Direction of the behavioral response, when known.
///
/// Recapture-prone populations bound the effect below by 1;
/// recapture-averse ones bound it above by 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionalKnowledge {
    Prone,
    Averse,
    None,
}

/// Engine configuration. `seed` is consumed by drivers that construct
/// random sources (the study harness and the CLI); the engine functions
/// themselves draw from their explicit [`RandomSource`] argument.
#[derive(Debug, Clone)]
pub struct MethodConfig {
    pub method: Method,
    /// Parallel chains `m`; the scale-reduction diagnostic needs >= 2.
    pub chains: usize,
    /// Inner Gibbs sample size `M` per maximization step (EWiG only).
    pub inner_samples: usize,
    pub max_outer_iters: usize,
    pub check_interval: usize,
    pub rhat_threshold: f64,
    pub knowledge: DirectionalKnowledge,
    /// Explicit prior; when absent the knowledge default applies
    /// (prone: U(1, 1/p), averse: U(c-hat, 1), none: GB-I(1, 1, p)).
    pub phi_prior: Option<PhiPrior>,
    pub seed: u64,
    /// Draws retained after burn-in; defaults to the burn-in length.
    pub retain: Option<usize>,
    /// Stopping tolerance on the nuisance update (EWiG).
    pub outer_tol: f64,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        let max_outer_iters = match method {
            Method::Da | Method::Semwig => 20_000,
            // The behavioral model is not identified, so very long
            // outer runs wander along the likelihood ridge; a moderate
            // cap keeps the sequence in its settled region.
            Method::Ewig1 | Method::Ewig2 => 100,
        };
        Self {
            method,
            chains: 5,
            inner_samples: 500,
            max_outer_iters,
            check_interval: 50,
            rhat_threshold: 1.1,
            knowledge: DirectionalKnowledge::None,
            phi_prior: None,
            seed: 0,
            retain: None,
            outer_tol: 1e-6,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_knowledge(mut self, knowledge: DirectionalKnowledge) -> Self {
        self.knowledge = knowledge;
        self
    }

    pub fn with_prior(mut self, prior: PhiPrior) -> Self {
        self.phi_prior = Some(prior);
        self
    }
}

/// The effective prior: the explicit one when given, otherwise the
/// knowledge-derived default.
pub fn resolve_prior(config: &MethodConfig, table: &DrsTable) -> Result<PhiPrior> {
    if let Some(prior) = config.phi_prior {
        return Ok(prior);
    }
    match config.knowledge {
        DirectionalKnowledge::Prone => PhiPrior::flat(1.0, f64::INFINITY),
        DirectionalKnowledge::Averse => {
            let c_hat = table.c_hat().min(1.0 - BOUNDARY_NUDGE);
            PhiPrior::flat(c_hat, 1.0)
        }
        DirectionalKnowledge::None => PhiPrior::gb1(1.0, 1.0),
    }
}

/// One chain's stored draws.
#[derive(Debug, Clone, Default)]
pub struct ChainTrace {
    pub n: Vec<u64>,
    pub p1: Vec<f64>,
    pub phi: Vec<f64>,
    /// Sampled `p` under DA; the running nuisance estimate under SEMWiG.
    pub p: Vec<f64>,
}

/// Multi-chain draws with the burn-in index settled by diagnostics.
#[derive(Debug, Clone)]
pub struct ChainSet {
    pub chains: Vec<ChainTrace>,
    /// Burn-in index `h`; retained draws are `h..h + retained`.
    pub burn_in: usize,
    pub retained: usize,
    pub converged: bool,
    /// Scale-reduction value at each checkpoint, for trace emission.
    pub rhat_trace: Vec<(usize, f64)>,
    /// Maximization steps that landed on a clip boundary.
    pub clip_events: usize,
}

impl ChainSet {
    /// Per-chain length.
    pub fn len(&self) -> usize {
        self.chains.first().map_or(0, |c| c.n.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn pooled<F: Fn(&ChainTrace) -> Vec<f64>>(&self, f: F) -> Vec<f64> {
        let lo = self.burn_in;
        let hi = (self.burn_in + self.retained).min(self.len());
        let mut out = Vec::with_capacity(self.chains.len() * (hi - lo));
        for chain in &self.chains {
            out.extend(f(chain)[lo..hi].iter().copied());
        }
        out
    }

    /// Post-burn-in population draws pooled across chains.
    pub fn retained_n(&self) -> Vec<f64> {
        self.pooled(|c| c.n.iter().map(|&n| n as f64).collect())
    }

    pub fn retained_p1(&self) -> Vec<f64> {
        self.pooled(|c| c.p1.clone())
    }

    pub fn retained_phi(&self) -> Vec<f64> {
        self.pooled(|c| c.phi.clone())
    }

    pub fn retained_p(&self) -> Vec<f64> {
        self.pooled(|c| c.p.clone())
    }

    /// Every stored draw satisfies `N >= x0`, `p1 in (0,1)` and
    /// `phi * p < 1`.
    pub fn check_feasibility(&self, x0: u64) -> bool {
        self.chains.iter().all(|c| {
            c.n.iter().all(|&n| n >= x0)
                && c.p1.iter().all(|&p1| p1 > 0.0 && p1 < 1.0)
                && c.phi.iter().zip(&c.p).all(|(&phi, &p)| phi * p < 1.0)
        })
    }
}

/// Non-fatal conditions surfaced alongside an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// A maximization step was clamped at its domain boundary.
    DegenerateClip { events: usize },
    /// The posterior credible interval of the behavioral effect abuts
    /// the lower prior limit (within 2% of the prior range).
    PriorLimitLow,
    /// Same at the upper prior limit.
    PriorLimitHigh,
    /// The convergence threshold was never met; results are partial.
    NoConvergence,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateClip { events } => {
                write!(f, "degenerate-clip: {events} maximization step(s) hit a domain boundary")
            }
            Warning::PriorLimitLow => {
                write!(f, "prior-limit: phi credible interval abuts the lower prior bound")
            }
            Warning::PriorLimitHigh => {
                write!(f, "prior-limit: phi credible interval abuts the upper prior bound")
            }
            Warning::NoConvergence => write!(f, "no-convergence: results are partial"),
        }
    }
}

/// Assembled estimate for reporting: posterior summaries, nuisance
/// point estimates, burn-in, and warnings.
#[derive(Debug, Clone)]
pub struct EstimateOutput {
    pub method: Method,
    pub prior: Option<PhiPrior>,
    pub n_summary: Summary,
    pub phi_summary: Option<Summary>,
    /// Point estimate of `p` (empirical-Bayes methods).
    pub p_hat: Option<f64>,
    /// Point estimate of `phi` (EWiG-II).
    pub phi_hat: Option<f64>,
    pub burn_in: Option<usize>,
    /// Per-chain length, or outer iterations for EWiG.
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<Warning>,
    /// Full chains for trace emission (DA and SEMWiG).
    pub chains: Option<ChainSet>,
}

/// Runs the configured engine and assembles posterior summaries at the
/// requested credible level.
pub fn run_estimate(
    table: &DrsTable,
    config: &MethodConfig,
    ci_level: f64,
    rng: &RandomSource,
) -> Result<EstimateOutput> {
    let mut warnings = Vec::new();
    let output = match config.method {
        Method::Da | Method::Semwig => {
            let set = match config.method {
                Method::Da => run_da(table, config, rng)?,
                _ => run_semwig(table, config, rng)?,
            };
            let n_summary = diagnostics::summarize(&set.retained_n(), ci_level)?;
            let phi_summary = Some(diagnostics::summarize(&set.retained_phi(), ci_level)?);
            let p_hat = match config.method {
                // Nuisance estimate: mean of the post-burn-in trace.
                Method::Semwig => {
                    Some(diagnostics::summarize(&set.retained_p(), ci_level)?.mean)
                }
                _ => None,
            };
            if !set.converged {
                warnings.push(Warning::NoConvergence);
            }
            if set.clip_events > 0 {
                warnings.push(Warning::DegenerateClip {
                    events: set.clip_events,
                });
            }
            EstimateOutput {
                method: config.method,
                prior: Some(resolve_prior(config, table)?),
                n_summary,
                phi_summary,
                p_hat,
                phi_hat: None,
                burn_in: Some(set.burn_in),
                iterations: set.len(),
                converged: set.converged,
                warnings: Vec::new(),
                chains: Some(set),
            }
        }
        Method::Ewig1 | Method::Ewig2 => {
            let result = match config.method {
                Method::Ewig1 => run_ewig1(table, config, rng)?,
                _ => run_ewig2(table, config, rng)?,
            };
            let n_draws: Vec<f64> = result.sample.n.iter().map(|&n| n as f64).collect();
            let n_summary = diagnostics::summarize(&n_draws, ci_level)?;
            let phi_summary = if result.sample.phi.is_empty() {
                None
            } else {
                Some(diagnostics::summarize(&result.sample.phi, ci_level)?)
            };
            if result.clip_events > 0 {
                warnings.push(Warning::DegenerateClip {
                    events: result.clip_events,
                });
            }
            EstimateOutput {
                method: config.method,
                prior: match config.method {
                    Method::Ewig1 => Some(resolve_prior(config, table)?),
                    _ => None,
                },
                n_summary,
                phi_summary,
                p_hat: Some(result.p_hat),
                phi_hat: result.phi_hat,
                burn_in: None,
                iterations: result.outer_iterations,
                converged: result.converged,
                warnings: Vec::new(),
                chains: None,
            }
        }
    };

    let mut output = output;
    // Post-hoc check: a phi interval hugging a finite prior limit
    // suggests the prior range is binding.
    if let (Some(PhiPrior::FlatUniform { lo, hi }), Some(phi)) =
        (output.prior, output.phi_summary)
    {
        let range = if hi.is_finite() { hi - lo } else { 0.0 };
        if hi.is_finite() && range > 0.0 {
            if phi.ci_low - lo < 0.02 * range {
                warnings.push(Warning::PriorLimitLow);
            }
            if hi - phi.ci_high < 0.02 * range {
                warnings.push(Warning::PriorLimitHigh);
            }
        }
    }
    output.warnings = warnings;
    Ok(output)
}

/// Initial behavioral-effect value: the prior midpoint, with an
/// infinite upper bound standing in for the live support limit `1/p`.
pub(crate) fn initial_phi(prior: &PhiPrior, p: f64) -> f64 {
    let (lo, hi) = prior.bounds();
    let hi_eff = if hi.is_finite() { hi } else { 1.0 / p };
    if hi_eff > lo {
        0.5 * (lo + hi_eff)
    } else {
        lo + BOUNDARY_NUDGE
    }
}

/// Initial nuisance/chain state shared by the empirical-Bayes engines:
/// the independence-model estimates, nudged inside open supports.
pub(crate) fn mt_start(table: &DrsTable) -> Result<(f64, f64, u64)> {
    let mt = mt_mle(table)?;
    let clamp = |x: f64| x.clamp(BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE);
    Ok((clamp(mt.p1_hat), clamp(mt.p_dot1_hat), mt.n_hat.ceil() as u64))
}

/// One full Gibbs scan of a chain's state; returns the stored draw
/// `(n, p1, phi, p)`.
pub(crate) trait GibbsKernel {
    fn step(&mut self, rng: &mut RandomSource) -> Result<(u64, f64, f64, f64)>;
    fn clip_events(&self) -> usize {
        0
    }
}

/// Runs `m` kernels in blocks of `check_interval`, settles the burn-in
/// with the scale-reduction rule, and extends the chains until the
/// retained window is available (or the iteration budget is spent).
pub(crate) fn drive_chains<K: GibbsKernel>(
    mut kernels: Vec<K>,
    mut rngs: Vec<RandomSource>,
    config: &MethodConfig,
) -> Result<ChainSet> {
    let m = kernels.len();
    assert_eq!(m, rngs.len());
    let interval = config.check_interval.max(1);
    let mut traces: Vec<ChainTrace> = vec![ChainTrace::default(); m];
    let mut n_f64: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut burn_in: Option<usize> = None;

    loop {
        for ((kernel, rng), (trace, nf)) in kernels
            .iter_mut()
            .zip(&mut rngs)
            .zip(traces.iter_mut().zip(&mut n_f64))
        {
            for _ in 0..interval {
                let (n, p1, phi, p) = kernel.step(rng)?;
                trace.n.push(n);
                trace.p1.push(p1);
                trace.phi.push(phi);
                trace.p.push(p);
                nf.push(n as f64);
            }
        }
        let len = traces[0].n.len();

        if burn_in.is_none() {
            if let Ok(h) = diagnostics::select_burnin(&n_f64, config.rhat_threshold, interval) {
                burn_in = Some(h);
            }
        }
        if let Some(h) = burn_in {
            let want = config.retain.unwrap_or(h);
            if len >= h + want {
                return Ok(finish(kernels, traces, &n_f64, interval, h, want, true));
            }
            if len >= config.max_outer_iters {
                // Budget exhausted after convergence: retain what exists.
                return Ok(finish(kernels, traces, &n_f64, interval, h, len - h, true));
            }
        } else if len >= config.max_outer_iters {
            // Never converged: flag and hand back the second half.
            let h = ((len / 2) / interval * interval).max(interval).min(len - 1);
            return Ok(finish(kernels, traces, &n_f64, interval, h, len - h, false));
        }
    }
}

fn finish<K: GibbsKernel>(
    kernels: Vec<K>,
    chains: Vec<ChainTrace>,
    n_f64: &[Vec<f64>],
    interval: usize,
    burn_in: usize,
    retained: usize,
    converged: bool,
) -> ChainSet {
    let clip_events = kernels.iter().map(|k| k.clip_events()).sum();
    let len = chains.first().map_or(0, |c| c.n.len());
    // Scale reduction at every checkpoint, each over the window the
    // burn-in rule would retain there.
    let mut rhat_trace = Vec::new();
    let mut h = interval;
    while h + 2 <= len {
        let value = diagnostics::psrf_sqrt_window(n_f64, h, (2 * h).min(len))
            .unwrap_or(f64::NAN);
        rhat_trace.push((h, value));
        h += interval;
    }
    ChainSet {
        chains,
        burn_in,
        retained,
        converged,
        rhat_trace,
        clip_events,
    }
}

/// Per-chain random sources derived from an engine's base source.
pub(crate) fn chain_sources(rng: &RandomSource, m: usize) -> Vec<RandomSource> {
    (0..m)
        .map(|c| rng.with_stream(streams::chain(rng.stream(), c as u32)))
        .collect()
}

/// Chains >= 2 when the scale-reduction diagnostic is in play.
pub(crate) fn require_multichain(config: &MethodConfig) -> Result<usize> {
    if config.chains < 2 {
        return Err(DrsError::Domain(format!(
            "scale-reduction diagnostics need at least 2 chains, got {}",
            config.chains
        )));
    }
    Ok(config.chains)
}
