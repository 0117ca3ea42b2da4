//! Multi-chain convergence diagnostics and posterior summaries.
//!
//! Burn-in is chosen with the square-root potential scale reduction
//! factor: the smallest checkpoint at which the statistic falls below
//! the threshold and stays there for two further checkpoints.

use crate::error::{DrsError, Result};

/// Between- and within-chain variance components over one equal-length
/// window `lo..hi` of every chain.
fn variance_components<S: AsRef<[f64]>>(
    chains: &[S],
    lo: usize,
    hi: usize,
) -> Result<(f64, f64, usize)> {
    let m = chains.len();
    if m < 2 {
        return Err(DrsError::Domain(format!(
            "scale reduction needs at least 2 chains, got {m}"
        )));
    }
    let len = chains.iter().map(|c| c.as_ref().len()).min().unwrap_or(0);
    let hi = hi.min(len);
    if lo >= hi || hi - lo < 2 {
        return Err(DrsError::Domain(format!(
            "scale reduction needs a window of length >= 2, got {lo}..{hi}"
        )));
    }
    let n = hi - lo;
    let nf = n as f64;
    let mut means = Vec::with_capacity(m);
    let mut vars = Vec::with_capacity(m);
    for chain in chains {
        let xs = &chain.as_ref()[lo..hi];
        let mean = xs.iter().sum::<f64>() / nf;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        means.push(mean);
        vars.push(var);
    }
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = nf / (m as f64 - 1.0)
        * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let within = vars.iter().sum::<f64>() / m as f64;
    Ok((between, within, n))
}

/// Square root of the potential scale reduction factor:
/// `sqrt((((n-1)/n) W + B/n) / W)` with `B` the between-chain and `W`
/// the mean within-chain variance.
pub fn psrf_sqrt<S: AsRef<[f64]>>(chains: &[S]) -> Result<f64> {
    let len = chains.iter().map(|c| c.as_ref().len()).min().unwrap_or(0);
    psrf_sqrt_window(chains, 0, len)
}

/// Same statistic restricted to the first `len` draws of every chain.
pub fn psrf_sqrt_prefix<S: AsRef<[f64]>>(chains: &[S], len: usize) -> Result<f64> {
    psrf_sqrt_window(chains, 0, len)
}

/// Same statistic over one window `lo..hi` of every chain.
pub fn psrf_sqrt_window<S: AsRef<[f64]>>(chains: &[S], lo: usize, hi: usize) -> Result<f64> {
    let (between, within, n) = variance_components(chains, lo, hi)?;
    if within == 0.0 {
        return Err(DrsError::ZeroWithinVariance);
    }
    let nf = n as f64;
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok((pooled / within).sqrt())
}

/// Smallest checkpoint `h` (a multiple of `check_interval`) at which
/// the scale reduction is below `threshold` and stays below at the next
/// two checkpoints.
///
/// The statistic at a checkpoint is evaluated on the draws the burn-in
/// rule would retain, the window `h..2h` (clipped to the available
/// length): burn-in is settled by the mixing of the sample that will be
/// kept, so an early transient cannot postpone it.
///
/// Chains that are all constant and identical count as passed; constant
/// chains that disagree never pass.
pub fn select_burnin<S: AsRef<[f64]>>(
    chains: &[S],
    threshold: f64,
    check_interval: usize,
) -> Result<usize> {
    if !(threshold > 1.0) {
        return Err(DrsError::Domain(format!(
            "threshold must exceed 1, got {threshold}"
        )));
    }
    if check_interval == 0 {
        return Err(DrsError::Domain("check interval must be positive".into()));
    }
    let n = chains.iter().map(|c| c.as_ref().len()).min().unwrap_or(0);
    let max_iters = n;
    let passes = |h: usize| -> Result<Option<bool>> {
        if h + 2 > n {
            return Ok(None); // window not available yet
        }
        let (between, within, _) = variance_components(chains, h, (2 * h).min(n))?;
        if within == 0.0 {
            return Ok(Some(between == 0.0));
        }
        let win = ((2 * h).min(n) - h) as f64;
        let pooled = (win - 1.0) / win * within + between / win;
        Ok(Some((pooled / within).sqrt() < threshold))
    };
    let checkpoints: Vec<usize> = (1..)
        .map(|i| i * check_interval)
        .take_while(|h| *h + 2 <= n)
        .collect();
    for (i, &h) in checkpoints.iter().enumerate() {
        if i + 2 >= checkpoints.len() {
            break;
        }
        let ok = passes(h)?
            .zip(passes(checkpoints[i + 1])?)
            .zip(passes(checkpoints[i + 2])?)
            .map(|((a, b), c)| a && b && c);
        if ok == Some(true) {
            return Ok(h);
        }
    }
    Err(DrsError::NoConvergence {
        threshold,
        max_iters,
    })
}

/// Posterior summary of one scalar trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation of the retained draws.
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Coefficient of variation `se / |mean|`.
    pub cv: f64,
}

/// Mean, sample standard deviation, quantile credible bounds at
/// `(1 +/- ci_level) / 2`, and coefficient of variation.
pub fn summarize(draws: &[f64], ci_level: f64) -> Result<Summary> {
    if draws.is_empty() {
        return Err(DrsError::EmptySample);
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(DrsError::Domain(format!(
            "credible level {ci_level} outside (0, 1)"
        )));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let se = if draws.len() == 1 {
        0.0
    } else {
        (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_q = (1.0 - ci_level) / 2.0;
    let ci_low = quantile_type7(&sorted, lo_q);
    let ci_high = quantile_type7(&sorted, 1.0 - lo_q);
    let cv = if se == 0.0 { 0.0 } else { se / mean.abs() };
    Ok(Summary {
        mean,
        se,
        ci_low,
        ci_high,
        cv,
    })
}

/// Linear interpolation between order statistics (the common "type 7"
/// convention), chosen for ubiquity and bit-reproducibility.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn identical_chains_hit_closed_form() {
        // B = 0 leaves sqrt((n-1)/n); n = 100 gives 0.99499.
        let chain: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let chains = vec![chain.clone(), chain.clone(), chain];
        let r = psrf_sqrt(&chains).unwrap();
        assert_abs_diff_eq!(r, (99.0f64 / 100.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn same_distribution_chains_near_one() {
        let mut rng = RandomSource::new(7, 0);
        let mut chains = Vec::new();
        for _ in 0..2 {
            let c: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
            chains.push(c);
        }
        let r = psrf_sqrt(&chains).unwrap();
        assert!(r > 0.99 && r < 1.02, "sqrt-Rhat {r}");
    }

    #[test]
    fn hand_evaluated_two_chain_case() {
        // Chains with means 0 and 10, within-variance 1, n = 100:
        // B = 100/(2-1) * ((0-5)^2 + (10-5)^2) = 5000, W = 1,
        // V = 99/100 * 1 + 5000/100 = 50.99, sqrt(50.99/1) = 7.140728...
        let n = 100;
        let base: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        // Adjust so the sample variance is exactly 1: mean 0, squares 1,
        // sum of squares = n, unbiased variance = n/(n-1).
        let scale = ((n - 1) as f64 / n as f64).sqrt();
        let a: Vec<f64> = base.iter().map(|x| x * scale).collect();
        let b: Vec<f64> = base.iter().map(|x| x * scale + 10.0).collect();
        let r = psrf_sqrt(&[a, b]).unwrap();
        let expect = (50.99f64).sqrt();
        assert_abs_diff_eq!(r, expect, epsilon = 1e-12);
    }

    #[test]
    fn zero_within_variance_is_an_error() {
        let chains = vec![vec![2.0; 50], vec![2.0; 50]];
        assert_eq!(psrf_sqrt(&chains), Err(DrsError::ZeroWithinVariance));
    }

    #[test]
    fn affine_invariance() {
        let mut rng = RandomSource::new(9, 0);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..500).map(|_| rng.random::<f64>()).collect())
            .collect();
        let r0 = psrf_sqrt(&chains).unwrap();
        let transformed: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.iter().map(|x| 3.5 * x - 11.0).collect())
            .collect();
        let r1 = psrf_sqrt(&transformed).unwrap();
        assert_abs_diff_eq!(r0, r1, epsilon = 1e-12);
    }

    #[test]
    fn burnin_immediate_when_mixed() {
        let mut rng = RandomSource::new(11, 0);
        let chains: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..400).map(|_| rng.random::<f64>()).collect())
            .collect();
        let h = select_burnin(&chains, 1.1, 50).unwrap();
        assert_eq!(h, 50);
    }

    #[test]
    fn burnin_never_for_disjoint_chains() {
        let a: Vec<f64> = (0..300).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = (0..300).map(|i| 1000.0 + (i % 7) as f64).collect();
        let err = select_burnin(&[a, b], 1.1, 50).unwrap_err();
        assert!(matches!(err, DrsError::NoConvergence { .. }));
    }

    #[test]
    fn burnin_monotone_in_threshold() {
        let mut rng = RandomSource::new(13, 0);
        // Drifting chains that eventually overlap.
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                (0..2000)
                    .map(|i| {
                        let drift = (c as f64) * (1.0 - (i as f64 / 300.0).min(1.0));
                        drift + rng.random::<f64>()
                    })
                    .collect()
            })
            .collect();
        let tight = select_burnin(&chains, 1.05, 50);
        let loose = select_burnin(&chains, 1.5, 50);
        if let (Ok(ht), Ok(hl)) = (tight, loose) {
            assert!(hl <= ht, "loose {hl} > tight {ht}");
        }
    }

    #[test]
    fn identical_constant_chains_pass_burnin() {
        let chains = vec![vec![50.0; 200], vec![50.0; 200]];
        assert_eq!(select_burnin(&chains, 1.1, 50).unwrap(), 50);
    }

    #[test]
    fn summarize_constant_draws() {
        let s = summarize(&[3.0; 10], 0.95).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.se, 0.0);
        assert_eq!((s.ci_low, s.ci_high), (3.0, 3.0));
        assert_eq!(s.cv, 0.0);
    }

    #[test]
    fn summarize_type7_hand_check() {
        // 1..100 at level 0.95: positions 0.025*99 = 2.475 and 96.525.
        let draws: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let s = summarize(&draws, 0.95).unwrap();
        assert_abs_diff_eq!(s.ci_low, 3.475, epsilon = 1e-12);
        assert_abs_diff_eq!(s.ci_high, 97.525, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean, 50.5, epsilon = 1e-12);
    }

    #[test]
    fn summarize_mean_permutation_invariant() {
        let a = vec![5.0, 1.0, 9.0, 2.0];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(
            summarize(&a, 0.9).unwrap().mean,
            summarize(&b, 0.9).unwrap().mean
        );
    }

    #[test]
    fn summarize_rejects_empty() {
        assert_eq!(summarize(&[], 0.95), Err(DrsError::EmptySample));
    }

    #[test]
    fn quantiles_bracket_requested_mass() {
        let mut rng = RandomSource::new(17, 0);
        let draws: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let s = summarize(&draws, 0.9).unwrap();
        let inside = draws
            .iter()
            .filter(|x| **x >= s.ci_low && **x <= s.ci_high)
            .count() as f64
            / draws.len() as f64;
        assert!(inside >= 0.9, "coverage of empirical draws {inside}");
    }
}
