//! Empirical-Bayes engines: the nuisance parameters are point-estimated
//! by maximizing the Monte-Carlo-averaged complete-data log-likelihood
//! between Gibbs passes.
//!
//! EWiG-I treats `p` as the nuisance and keeps priors on `(N, p1, phi)`.
//! EWiG-II also absorbs `phi` into the nuisance; in the reparameterized
//! scale `c = phi * p` the averaged objective separates, giving the
//! closed-form maximizers `c-hat = x11 / x1.` and
//! `p-hat = x01 / (x01 + mean(N) - x0)`.

use super::{mt_start, resolve_prior, MethodConfig, BOUNDARY_NUDGE};
use crate::error::{DrsError, Result};
use crate::model::DrsTable;
use crate::estimators::DirectionalKnowledge;
use crate::rng::{streams, RandomSource};
use crate::samplers::{sample_p1, sample_phi, sample_x00, PhiPrior};

/// Final Gibbs sample drawn at the converged nuisance estimate.
#[derive(Debug, Clone, Default)]
pub struct PosteriorSample {
    pub n: Vec<u64>,
    pub p1: Vec<f64>,
    /// Empty when the engine never samples the behavioral effect.
    pub phi: Vec<f64>,
}

/// Output of an EWiG run: nuisance point estimates, the final posterior
/// sample, and the estimate trace across outer iterations.
#[derive(Debug, Clone)]
pub struct EwigResult {
    pub p_hat: f64,
    /// Point estimate of the behavioral effect (EWiG-II only).
    pub phi_hat: Option<f64>,
    pub sample: PosteriorSample,
    pub p_trace: Vec<f64>,
    pub outer_iterations: usize,
    /// Whether the update tolerance was met before the iteration cap.
    pub converged: bool,
    pub clip_events: usize,
}

/// Result of one maximization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MStep {
    pub p: f64,
    /// The maximizer sat on a domain boundary and was nudged inside.
    pub clipped: bool,
}

/// Domain for the `p` objective: `(0, min(1, 1/phi_j))` shrunk inside
/// open boundaries when the `(1 - phi p)` term is active, `(0, 1)`
/// otherwise.
pub(crate) fn mstep_domain(draws: &[(u64, f64)], v: f64, x10: u64) -> (f64, f64) {
    let shape = (x10 as f64 + v - 1.0).max(0.0);
    if shape > 0.0 {
        let min_inv = draws
            .iter()
            .map(|&(_, phi)| 1.0 / phi)
            .fold(f64::INFINITY, f64::min);
        (BOUNDARY_NUDGE, min_inv.min(1.0) - BOUNDARY_NUDGE)
    } else {
        (BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE)
    }
}

/// The p-dependent factors the behavioral-effect prior contributes to
/// the joint objective of the maximization step. The averaged
/// complete-data objective is the joint log-density of parameters and
/// data, so a conjugate prior adds `u log p`, and a flat prior whose
/// upper bound rides the support (`U(lo, 1/p)`) adds its normalizing
/// constant `log p - log(1 - lo p)`. Fixed-bound flat priors add
/// nothing.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PriorTerms {
    log_p: f64,
    flat_lo: Option<f64>,
    v: f64,
}

pub(crate) fn prior_terms(prior: &PhiPrior) -> PriorTerms {
    match *prior {
        PhiPrior::GenBetaOne { u, v } => PriorTerms {
            log_p: u,
            flat_lo: None,
            v,
        },
        PhiPrior::FlatUniform { lo, hi } if hi.is_infinite() => PriorTerms {
            log_p: 1.0,
            flat_lo: Some(lo),
            v: 1.0,
        },
        PhiPrior::FlatUniform { .. } => PriorTerms {
            log_p: 0.0,
            flat_lo: None,
            v: 1.0,
        },
    }
}

/// Maximization step over the joint objective (likelihood plus the
/// prior factors above), used by the engines.
pub(crate) fn m_step_joint(
    draws: &[(u64, f64)],
    table: &DrsTable,
    terms: PriorTerms,
) -> Result<MStep> {
    if draws.is_empty() {
        return Err(DrsError::EmptySample);
    }
    let (lo, mut hi) = mstep_domain(draws, terms.v, table.x10());
    if let Some(flat_lo) = terms.flat_lo {
        if flat_lo > 0.0 {
            hi = hi.min(1.0 / flat_lo - BOUNDARY_NUDGE);
        }
    }
    if !(lo < hi) {
        return Err(DrsError::OptimizerFailure(format!(
            "empty maximization domain ({lo}, {hi})"
        )));
    }
    let shape = (table.x10() as f64 + terms.v - 1.0).max(0.0);
    let xdot1 = table.xdot1() as f64;
    let x0 = table.x0();
    let mean_tail = draws.iter().map(|&(n, _)| (n - x0) as f64).sum::<f64>()
        / draws.len() as f64;

    let objective = |p: f64| -> f64 {
        let mut g = (xdot1 + terms.log_p) * p.ln() + mean_tail * (-p).ln_1p();
        if shape > 0.0 {
            g += shape
                * draws
                    .iter()
                    .map(|&(_, phi)| (-phi * p).ln_1p())
                    .sum::<f64>()
                / draws.len() as f64;
        }
        if let Some(flat_lo) = terms.flat_lo {
            g -= (-flat_lo * p).ln_1p();
        }
        g
    };

    let p = golden_max(&objective, lo, hi, 1e-8);
    let edge = 1e-7 * (hi - lo);
    let clipped = p - lo < edge || hi - p < edge;
    let p = p.clamp(lo + BOUNDARY_NUDGE, hi - BOUNDARY_NUDGE);
    Ok(MStep { p, clipped })
}

/// Maximizes the averaged complete-data log-likelihood in `p` over the
/// given domain by golden-section search (tolerance 1e-8).
///
/// The per-draw objective is
/// `x.1 log p + (N_j - x0) log(1 - p) + (x10 + v - 1) log(1 - phi_j p)`;
/// the last exponent floors at zero, which keeps the objective proper
/// when an improper prior meets `x10 = 0`.
pub fn m_step_p(
    draws: &[(u64, f64)],
    table: &DrsTable,
    v: f64,
    domain: (f64, f64),
) -> Result<MStep> {
    if draws.is_empty() {
        return Err(DrsError::EmptySample);
    }
    let (lo, hi) = domain;
    if !(lo > 0.0 && lo < hi && hi < 1.0 + BOUNDARY_NUDGE) {
        return Err(DrsError::OptimizerFailure(format!(
            "empty or invalid domain ({lo}, {hi})"
        )));
    }
    let shape = (table.x10() as f64 + v - 1.0).max(0.0);
    let xdot1 = table.xdot1() as f64;
    let x0 = table.x0();
    let mean_tail = draws
        .iter()
        .map(|&(n, _)| (n - x0) as f64)
        .sum::<f64>()
        / draws.len() as f64;

    let objective = |p: f64| -> f64 {
        let mut g = xdot1 * p.ln() + mean_tail * (-p).ln_1p();
        if shape > 0.0 {
            let mean_log = draws
                .iter()
                .map(|&(_, phi)| (-phi * p).ln_1p())
                .sum::<f64>()
                / draws.len() as f64;
            g += shape * mean_log;
        }
        g
    };

    let p = golden_max(&objective, lo, hi, 1e-8);

    // Concavity sanity check away from the boundaries.
    let delta = 1e-4 * (hi - lo);
    if p - delta > lo && p + delta < hi {
        let g = objective(p);
        let second = objective(p - delta) - 2.0 * g + objective(p + delta);
        if second > 1e-9 * (1.0 + g.abs()) {
            return Err(DrsError::OptimizerFailure(format!(
                "objective not concave near {p}: second difference {second}"
            )));
        }
    }

    let edge = 1e-7 * (hi - lo);
    let clipped = p - lo < edge || hi - p < edge;
    let p = p.clamp(lo + BOUNDARY_NUDGE, hi - BOUNDARY_NUDGE);
    Ok(MStep { p, clipped })
}

fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// EWiG-I: priors on `(N, p1, phi)`, nuisance `p` point-estimated from
/// `M` inner Gibbs draws per outer iteration. Stops when the update
/// moves less than the tolerance or the iteration cap is reached; the
/// posterior sample is a fresh `M` draws at the final estimate.
pub fn run_ewig1(table: &DrsTable, config: &MethodConfig, rng: &RandomSource) -> Result<EwigResult> {
    if table.x11() == 0 {
        return Err(DrsError::ZeroOverlap);
    }
    let m_inner = config.inner_samples.max(1);
    let prior = resolve_prior(config, table)?;
    let terms = prior_terms(&prior);
    let (mut p1, mut p_hat, _) = mt_start(table)?;
    let mut chain_rng = rng.with_stream(streams::chain(rng.stream(), 0));

    let x0 = table.x0();
    let mut p_trace = vec![p_hat];
    let mut clip_events = 0usize;
    let mut converged = false;

    for _ in 0..config.max_outer_iters {
        let mut draws = Vec::with_capacity(m_inner);
        for _ in 0..m_inner {
            let mu = 1.0 - (1.0 - p_hat) * (1.0 - p1);
            let n = x0 + sample_x00(x0, mu, &mut chain_rng)?;
            p1 = sample_p1(table.x1dot(), n, &mut chain_rng)?;
            let phi = sample_phi(table.x11(), table.x10(), p_hat, &prior, &mut chain_rng)?;
            draws.push((n, phi));
        }
        let step = m_step_joint(&draws, table, terms)?;
        if step.clipped {
            clip_events += 1;
        }
        let delta = (step.p - p_hat).abs();
        p_hat = step.p;
        p_trace.push(p_hat);
        if delta < config.outer_tol {
            converged = true;
            break;
        }
    }

    let mut sample = PosteriorSample::default();
    for _ in 0..m_inner {
        let mu = 1.0 - (1.0 - p_hat) * (1.0 - p1);
        let n = x0 + sample_x00(x0, mu, &mut chain_rng)?;
        p1 = sample_p1(table.x1dot(), n, &mut chain_rng)?;
        let phi = sample_phi(table.x11(), table.x10(), p_hat, &prior, &mut chain_rng)?;
        sample.n.push(n);
        sample.p1.push(p1);
        sample.phi.push(phi);
    }

    Ok(EwigResult {
        p_hat,
        phi_hat: None,
        sample,
        outer_iterations: p_trace.len() - 1,
        p_trace,
        converged,
        clip_events,
    })
}

/// EWiG-II: Gibbs over `(N, p1)` only, with `(p, phi)` updated jointly
/// through the separable closed form and `p` clipped to the domain the
/// directional knowledge dictates: `(0, c-hat)` for prone, `(c-hat, 1)`
/// for averse, `(0, 1)` otherwise.
pub fn run_ewig2(table: &DrsTable, config: &MethodConfig, rng: &RandomSource) -> Result<EwigResult> {
    if table.x11() == 0 {
        return Err(DrsError::ZeroOverlap);
    }
    let m_inner = config.inner_samples.max(1);
    let (mut p1, mut p_hat, _) = mt_start(table)?;
    let mut chain_rng = rng.with_stream(streams::chain(rng.stream(), 0));

    let x0 = table.x0();
    let c_hat = table.c_hat().clamp(BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE);
    let (clip_lo, clip_hi) = match config.knowledge {
        DirectionalKnowledge::Prone => (BOUNDARY_NUDGE, c_hat - BOUNDARY_NUDGE),
        DirectionalKnowledge::Averse => (c_hat + BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE),
        DirectionalKnowledge::None => (BOUNDARY_NUDGE, 1.0 - BOUNDARY_NUDGE),
    };
    let clip_lo = clip_lo.min(1.0 - 2.0 * BOUNDARY_NUDGE);
    let clip_hi = clip_hi.max(clip_lo + BOUNDARY_NUDGE);

    let mut p_trace = vec![p_hat];
    let mut clip_events = 0usize;
    let mut converged = false;

    for _ in 0..config.max_outer_iters {
        let mut sum_n = 0.0;
        for _ in 0..m_inner {
            let mu = 1.0 - (1.0 - p_hat) * (1.0 - p1);
            let n = x0 + sample_x00(x0, mu, &mut chain_rng)?;
            p1 = sample_p1(table.x1dot(), n, &mut chain_rng)?;
            sum_n += n as f64;
        }
        let n_bar = sum_n / m_inner as f64;
        let denom = table.x01() as f64 + n_bar - x0 as f64;
        let (p_unres, degenerate) = if denom > 1e-12 {
            (table.x01() as f64 / denom, false)
        } else {
            // x01 = 0 and every draw sat at N = x0: flat objective.
            (p_hat, true)
        };
        let p_new = p_unres.clamp(clip_lo, clip_hi);
        if degenerate || p_new != p_unres {
            clip_events += 1;
        }
        let delta = (p_new - p_hat).abs();
        p_hat = p_new;
        p_trace.push(p_hat);
        if delta < config.outer_tol {
            converged = true;
            break;
        }
    }

    let mut sample = PosteriorSample::default();
    for _ in 0..m_inner {
        let mu = 1.0 - (1.0 - p_hat) * (1.0 - p1);
        let n = x0 + sample_x00(x0, mu, &mut chain_rng)?;
        p1 = sample_p1(table.x1dot(), n, &mut chain_rng)?;
        sample.n.push(n);
        sample.p1.push(p1);
    }

    Ok(EwigResult {
        p_hat,
        phi_hat: Some(c_hat / p_hat),
        sample,
        outer_iterations: p_trace.len() - 1,
        p_trace,
        converged,
        clip_events,
    })
}
