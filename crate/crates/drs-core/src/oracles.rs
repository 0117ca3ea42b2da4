//! Reference oracles for the validation suites: brute-force
//! enumeration, grid quadrature of target densities, and
//! goodness-of-fit statistics.
//!
//! Everything here is deliberately independent of the sampler
//! implementations it checks: masses come from direct log-gamma
//! evaluation and CDFs from trapezoid quadrature, never from the
//! recurrences or envelopes under test. Compiled only with the
//! `test-oracles` feature.

use crate::model::DrsTable;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Normalized mass of the missing-cell conditional (size-`x0` falling
/// factorial times `(1 - mu)^N` under the reciprocal prior) enumerated
/// over `x00 = 0..=k_max`.
pub fn missing_cell_reference_mass(x0: u64, mu: f64, k_max: u64) -> Vec<f64> {
    let x0f = x0 as f64;
    let ln_q = (1.0 - mu).ln();
    let log_w: Vec<f64> = (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            ln_gamma(x0f + kf) - ln_gamma(kf + 1.0) + (x0f + kf) * ln_q
        })
        .collect();
    normalize_log_mass(&log_w)
}

/// Regularized incomplete beta; the exact CDF oracle for Beta draws.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// Log-density of the `p` conditional,
/// `x.1 log p + (N - x0) log(1 - p) + x10 log(1 - phi p)`, written out
/// directly for quadrature.
pub fn p_conditional_log_density(n: u64, phi: f64, table: &DrsTable, p: f64) -> f64 {
    table.xdot1() as f64 * p.ln()
        + (n - table.x0()) as f64 * (1.0 - p).ln()
        + table.x10() as f64 * (1.0 - phi * p).ln()
}

/// Log-density of the truncated behavioral-effect conditional with
/// posterior Beta shapes `(a, b)`:
/// `(a - 1) log phi + (b - 1) log(1 - p phi)`.
pub fn phi_conditional_log_density(a: f64, b: f64, p: f64, phi: f64) -> f64 {
    (a - 1.0) * phi.ln() + (b - 1.0) * (1.0 - p * phi).ln()
}

/// Numeric CDF from trapezoid quadrature of a log-density over an
/// equally spaced grid on `(lo, hi)`.
pub struct GridCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    pub fn build(lo: f64, hi: f64, points: usize, log_density: impl Fn(f64) -> f64) -> Self {
        assert!(points >= 2 && hi > lo);
        let h = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo + i as f64 * h).collect();
        let logs: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let vals: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let mut cdf = Vec::with_capacity(points);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 1..points {
            acc += 0.5 * (vals[i - 1] + vals[i]) * h;
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        for c in &mut cdf {
            *c /= total;
        }
        Self { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = self.xs.partition_point(|&g| g < x);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (x - x0) / (x1 - x0) * (c1 - c0)
    }
}

/// Kolmogorov-Smirnov statistic of draws against a reference CDF.
pub fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in draws.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Total-variation distance between an empirical count vector and a
/// reference mass vector on the same support; empirical mass beyond the
/// enumerated support counts in full.
pub fn tv_distance(counts: &[u64], total_draws: u64, reference: &[f64]) -> f64 {
    let n = total_draws as f64;
    let mut tv = 0.0;
    let mut seen = 0u64;
    for (k, &r) in reference.iter().enumerate() {
        let emp = counts.get(k).copied().unwrap_or(0);
        seen += emp;
        tv += (emp as f64 / n - r).abs();
    }
    tv += (total_draws - seen) as f64 / n;
    0.5 * tv
}

fn normalize_log_mass(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}
