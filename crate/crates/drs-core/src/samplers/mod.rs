//! Exact draws from every conditional posterior the Gibbs engines need.
//!
//! Each sampler is a pure function of its inputs and an explicit
//! [`RandomSource`], so chains replay byte-identically under a fixed
//! `(seed, stream)` pair. The nonstandard conditional of `p` lives in
//! [`ars`]; the remaining conditionals are a negative binomial (missing
//! cell), a Beta (list-1 rate), and a truncated generalized Beta of the
//! first kind (behavioral effect).

mod ars;

pub use ars::{sample_p_ars, ArsEnvelope, ArsSampler};

use crate::error::{DrsError, Result};
use crate::rng::RandomSource;
use rand::Rng;
use rand_distr::Distribution;
use statrs::function::beta::beta_reg;
use std::fmt;

/// Draws are kept this far inside open support boundaries.
pub(crate) const SUPPORT_SHRINK: f64 = 1e-12;

/// Prior family for the behavioral response effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiPrior {
    /// Flat prior on `[lo, hi]`. `hi = f64::INFINITY` means the bound
    /// follows the live support `1/p`, which is how "U(1, 1/p)" style
    /// priors are expressed.
    FlatUniform { lo: f64, hi: f64 },
    /// Generalized Beta type-I conjugate prior with shape `(u, v)` and
    /// rate equal to the current `p` (support `(0, 1/p)`).
    GenBetaOne { u: f64, v: f64 },
}

impl PhiPrior {
    pub fn flat(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi) {
            return Err(DrsError::Domain(format!(
                "flat prior needs 0 <= lo < hi; got [{lo}, {hi}]"
            )));
        }
        Ok(PhiPrior::FlatUniform { lo, hi })
    }

    pub fn gb1(u: f64, v: f64) -> Result<Self> {
        if !(u >= 0.0 && v >= 0.0) {
            return Err(DrsError::Domain(format!(
                "generalized-Beta prior needs nonnegative shapes; got ({u}, {v})"
            )));
        }
        Ok(PhiPrior::GenBetaOne { u, v })
    }

    /// Posterior shape parameters `(x11 + a, x10 + b)` of `y = p * phi`.
    /// A flat prior acts like shape `(1, 1)`.
    pub(crate) fn posterior_shapes(&self, x11: u64, x10: u64) -> (f64, f64) {
        match *self {
            PhiPrior::FlatUniform { .. } => (x11 as f64 + 1.0, x10 as f64 + 1.0),
            PhiPrior::GenBetaOne { u, v } => (x11 as f64 + u, x10 as f64 + v),
        }
    }

    /// Truncation interval for `phi` before intersecting with the
    /// support `(0, 1/p)`.
    pub(crate) fn bounds(&self) -> (f64, f64) {
        match *self {
            PhiPrior::FlatUniform { lo, hi } => (lo, hi),
            PhiPrior::GenBetaOne { .. } => (0.0, f64::INFINITY),
        }
    }

    /// Exponent shape `v` entering the maximization objective for `p`
    /// as `(x10 + v - 1) * log(1 - phi * p)`.
    pub fn mstep_shape(&self) -> f64 {
        match *self {
            PhiPrior::FlatUniform { .. } => 1.0,
            PhiPrior::GenBetaOne { v, .. } => v,
        }
    }
}

impl fmt::Display for PhiPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PhiPrior::FlatUniform { lo, hi } if hi.is_infinite() => write!(f, "U({lo}, 1/p)"),
            PhiPrior::FlatUniform { lo, hi } => write!(f, "U({lo}, {hi})"),
            PhiPrior::GenBetaOne { u, v } => write!(f, "GB-I({u}, {v}, p)"),
        }
    }
}

/// Draws the missing-cell count from its negative binomial conditional
/// with size `x0` and success probability `mu`; the caller forms
/// `N = x0 + x00`. The draw inverts the cumulative mass through the
/// log-pmf recurrence, so it is exact and costs one uniform.
pub fn sample_x00(x0: u64, mu: f64, rng: &mut RandomSource) -> Result<u64> {
    if x0 == 0 {
        return Err(DrsError::Domain("x0 must be at least 1".into()));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(DrsError::Domain(format!("mu = {mu} outside (0, 1]")));
    }
    if mu == 1.0 {
        return Ok(0);
    }

    let u: f64 = rng.random();
    let q = 1.0 - mu;
    let ln_q = (-mu).ln_1p();

    // Head terms below exp's range carry mass < 1e-300 in total; skip
    // them in log space, then accumulate linearly.
    let mut k: u64 = 0;
    let mut log_pmf = x0 as f64 * mu.ln();
    while log_pmf < -700.0 {
        log_pmf += ((x0 + k) as f64 / (k + 1) as f64).ln() + ln_q;
        k += 1;
    }
    let mut pmf = log_pmf.exp();
    let mut cdf = pmf;
    let mode = x0 as f64 * q / mu;
    while cdf < u {
        pmf *= (x0 + k) as f64 / (k + 1) as f64 * q;
        k += 1;
        cdf += pmf;
        // Far past the mode the remaining mass is unrepresentable;
        // clamp rather than loop forever on a saturated cdf.
        if pmf < 1e-320 && k as f64 > mode {
            break;
        }
    }
    Ok(k)
}

/// Draws the list-1 capture probability from `Beta(x1. + 1, n - x1. + 1)`.
pub fn sample_p1(x1dot: u64, n: u64, rng: &mut RandomSource) -> Result<f64> {
    if n < x1dot {
        return Err(DrsError::Domain(format!(
            "population size {n} smaller than list-1 total {x1dot}"
        )));
    }
    let beta = rand_distr::Beta::new(x1dot as f64 + 1.0, (n - x1dot) as f64 + 1.0)
        .map_err(|e| DrsError::Domain(format!("Beta shape error: {e}")))?;
    let draw: f64 = beta.sample(rng);
    Ok(draw.clamp(SUPPORT_SHRINK, 1.0 - SUPPORT_SHRINK))
}

/// Draws the behavioral effect from its generalized Beta type-I
/// conditional truncated to the prior interval. Uses the change of
/// variable `y = p * phi ~ Beta(x11 + a, x10 + b)` truncated to
/// `[p * lo, p * hi]` and inverts the regularized incomplete beta by
/// bisection to absolute tolerance 1e-12 in `y`.
pub fn sample_phi(
    x11: u64,
    x10: u64,
    p: f64,
    prior: &PhiPrior,
    rng: &mut RandomSource,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DrsError::Domain(format!("p = {p} outside (0, 1)")));
    }
    let (a, b) = prior.posterior_shapes(x11, x10);
    if !(a > 0.0 && b > 0.0) {
        return Err(DrsError::Domain(format!(
            "improper conditional: Beta shapes ({a}, {b}) must be positive"
        )));
    }
    let (lo, hi) = prior.bounds();
    // Intersect [lo, hi] with the support (0, 1/p), mapped to y-space.
    let y_lo = (p * lo).clamp(0.0, 1.0);
    let y_hi = if hi.is_infinite() {
        1.0 - SUPPORT_SHRINK
    } else {
        (p * hi).min(1.0 - SUPPORT_SHRINK)
    };
    if y_lo >= y_hi {
        return Err(DrsError::EmptyTruncation { lo, hi, p });
    }

    let cdf_lo = if y_lo <= 0.0 { 0.0 } else { beta_reg(a, b, y_lo) };
    let cdf_hi = beta_reg(a, b, y_hi);
    let mass = cdf_hi - cdf_lo;
    if !(mass > 0.0) {
        return Err(DrsError::EmptyTruncation { lo, hi, p });
    }

    let u: f64 = rng.random();
    let target = cdf_lo + u * mass;
    let mut lo_y = y_lo;
    let mut hi_y = y_hi;
    while hi_y - lo_y > 1e-12 {
        let mid = 0.5 * (lo_y + hi_y);
        if beta_reg(a, b, mid) < target {
            lo_y = mid;
        } else {
            hi_y = mid;
        }
    }
    let phi = 0.5 * (lo_y + hi_y) / p;
    // Enforce membership in the truncation interval exactly.
    let upper = if hi.is_infinite() { 1.0 / p } else { hi.min(1.0 / p) };
    Ok(phi.clamp(
        lo.max(SUPPORT_SHRINK / p),
        upper - SUPPORT_SHRINK / p,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(stream: u64) -> RandomSource {
        RandomSource::new(0xD25, stream)
    }

    #[test]
    fn x00_is_zero_when_mu_is_one() {
        let mut rng = src(0);
        for _ in 0..100 {
            assert_eq!(sample_x00(60, 1.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn x00_mean_matches_moment_formula() {
        // mean = x0 (1 - mu) / mu = 15 at (60, 0.8).
        let mut rng = src(1);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_x00(60, 0.8, &mut rng).unwrap() as f64;
        }
        let mean = sum / n as f64;
        let sd = (60.0 * 0.2 / (0.8 * 0.8) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 15.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn x00_survives_deep_underflow_regime() {
        // pmf(0) = 0.5^4000 underflows; the log-space head must carry it.
        let mut rng = src(2);
        let mut sum = 0.0;
        let n = 2_000;
        for _ in 0..n {
            sum += sample_x00(4000, 0.5, &mut rng).unwrap() as f64;
        }
        let mean = sum / n as f64;
        let sd = (4000.0 * 0.5f64 / 0.25).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 4000.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn x00_rejects_bad_inputs() {
        let mut rng = src(3);
        assert!(sample_x00(0, 0.5, &mut rng).is_err());
        assert!(sample_x00(10, 0.0, &mut rng).is_err());
        assert!(sample_x00(10, 1.5, &mut rng).is_err());
    }

    #[test]
    fn p1_boundary_shape_mean() {
        // x1. = N: Beta(N+1, 1) has mean (N+1)/(N+2).
        let mut rng = src(4);
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_p1(100, 100, &mut rng).unwrap();
        }
        let mean = sum / n as f64;
        assert!((mean - 101.0 / 102.0).abs() < 5e-4, "mean {mean}");
    }

    #[test]
    fn p1_rejects_n_below_margin() {
        let mut rng = src(5);
        assert!(sample_p1(101, 100, &mut rng).is_err());
    }

    #[test]
    fn phi_flat_reduced_case_is_uniform() {
        // x11 = x10 = 0 with GB-I(1,1): Uniform(0, 1/p), mean 1/(2p).
        let mut rng = src(6);
        let prior = PhiPrior::gb1(1.0, 1.0).unwrap();
        let p = 0.4;
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_phi(0, 0, p, &prior, &mut rng).unwrap();
        }
        let mean = sum / n as f64;
        let sd = (1.0 / p) / 12f64.sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 1.0 / (2.0 * p)).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn phi_empty_truncation() {
        // Support ends at 1/p ~ 1.667 but the prior starts at 2.
        let mut rng = src(7);
        let prior = PhiPrior::flat(2.0, 3.0).unwrap();
        let err = sample_phi(10, 5, 0.6, &prior, &mut rng).unwrap_err();
        assert!(matches!(err, DrsError::EmptyTruncation { .. }));
    }

    #[test]
    fn phi_draws_stay_in_truncation_interval() {
        let mut rng = src(8);
        let prior = PhiPrior::flat(1.0, 2.0).unwrap();
        for _ in 0..5_000 {
            let p = 0.3 + 0.4 * rand::Rng::random::<f64>(&mut rng);
            let phi = sample_phi(20, 10, p, &prior, &mut rng).unwrap();
            assert!(phi >= 1.0 && phi <= 2.0_f64.min(1.0 / p), "phi {phi} p {p}");
        }
    }

    #[test]
    fn phi_improper_shapes_rejected() {
        let mut rng = src(9);
        let prior = PhiPrior::gb1(0.0, 0.0).unwrap();
        assert!(sample_phi(0, 5, 0.5, &prior, &mut rng).is_err());
    }

    #[test]
    fn samplers_replay_deterministically() {
        let prior = PhiPrior::flat(0.5, 2.0).unwrap();
        let run = || {
            let mut rng = src(10);
            let mut out = Vec::new();
            for _ in 0..50 {
                out.push(sample_x00(60, 0.8, &mut rng).unwrap() as f64);
                out.push(sample_p1(50, 100, &mut rng).unwrap());
                out.push(sample_phi(30, 20, 0.5, &prior, &mut rng).unwrap());
            }
            out
        };
        assert_eq!(run(), run());
    }
}
