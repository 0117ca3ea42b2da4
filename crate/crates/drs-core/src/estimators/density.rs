//! Mixture-of-conditionals posterior density estimates.
//!
//! Given a final Gibbs sample, the posterior of each block is estimated
//! by averaging its full conditional across the sampled values of the
//! other block. For the population size that average is a mixture of
//! shifted negative binomials; for the list-1 rate it is a mixture of
//! Betas.

use crate::error::{DrsError, Result};
use statrs::function::gamma::ln_gamma;

/// Posterior mass function of `N` as a mixture of shifted negative
/// binomial conditionals, one per retained draw.
#[derive(Debug, Clone)]
pub struct NPosteriorMass {
    x0: u64,
    mus: Vec<f64>,
}

impl NPosteriorMass {
    pub fn new(x0: u64, mus: Vec<f64>) -> Result<Self> {
        if mus.is_empty() {
            return Err(DrsError::EmptySample);
        }
        if x0 == 0 {
            return Err(DrsError::Domain("x0 must be at least 1".into()));
        }
        for &mu in &mus {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(DrsError::Domain(format!("mu = {mu} outside (0, 1]")));
            }
        }
        Ok(Self { x0, mus })
    }

    /// Builds the mixture from `p1` draws at a fixed nuisance `p`:
    /// each component uses `mu_j = 1 - (1 - p)(1 - p1_j)`.
    pub fn from_p1_draws(x0: u64, p1_draws: &[f64], p: f64) -> Result<Self> {
        let mus = p1_draws
            .iter()
            .map(|&p1| 1.0 - (1.0 - p) * (1.0 - p1))
            .collect();
        Self::new(x0, mus)
    }

    pub fn x0(&self) -> u64 {
        self.x0
    }

    /// Mass at population size `n`; zero below the observed count.
    pub fn pmf(&self, n: u64) -> f64 {
        if n < self.x0 {
            return 0.0;
        }
        let k = (n - self.x0) as f64;
        let x0 = self.x0 as f64;
        let binom = ln_gamma(x0 + k) - ln_gamma(k + 1.0) - ln_gamma(x0);
        let mut total = 0.0;
        for &mu in &self.mus {
            total += (binom + x0 * mu.ln() + k * (-mu).ln_1p()).exp();
        }
        total / self.mus.len() as f64
    }

    /// Mixture mean `x0 + mean_j(x0 (1 - mu_j) / mu_j)`.
    pub fn mean(&self) -> f64 {
        let x0 = self.x0 as f64;
        let avg = self.mus.iter().map(|&mu| x0 * (1.0 - mu) / mu).sum::<f64>()
            / self.mus.len() as f64;
        x0 + avg
    }

    /// Total mass summed from `x0` until the running term falls below
    /// `tail_cutoff` past every component mode.
    pub fn total_mass(&self, tail_cutoff: f64) -> f64 {
        let max_mode = self
            .mus
            .iter()
            .map(|&mu| self.x0 as f64 * (1.0 - mu) / mu)
            .fold(0.0, f64::max);
        let mut sum = 0.0;
        let mut n = self.x0;
        loop {
            let mass = self.pmf(n);
            sum += mass;
            if mass < tail_cutoff && (n - self.x0) as f64 > max_mode {
                return sum;
            }
            n += 1;
        }
    }
}

/// Posterior density of a rate as a mixture of Beta conditionals.
#[derive(Debug, Clone)]
pub struct BetaMixture {
    shapes: Vec<(f64, f64)>,
}

impl BetaMixture {
    pub fn new(shapes: Vec<(f64, f64)>) -> Result<Self> {
        if shapes.is_empty() {
            return Err(DrsError::EmptySample);
        }
        for &(a, b) in &shapes {
            if !(a > 0.0 && b > 0.0) {
                return Err(DrsError::Domain(format!(
                    "Beta shapes ({a}, {b}) must be positive"
                )));
            }
        }
        Ok(Self { shapes })
    }

    /// Builds the `p1` mixture from population draws:
    /// `Beta(x1. + 1, n_j - x1. + 1)` per draw.
    pub fn from_n_draws(n_draws: &[u64], x1dot: u64) -> Result<Self> {
        let shapes = n_draws
            .iter()
            .map(|&n| {
                if n < x1dot {
                    Err(DrsError::Domain(format!(
                        "population draw {n} below list-1 total {x1dot}"
                    )))
                } else {
                    Ok((x1dot as f64 + 1.0, (n - x1dot) as f64 + 1.0))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shapes)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let mut total = 0.0;
        for &(a, b) in &self.shapes {
            let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
            total += (ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p()).exp();
        }
        total / self.shapes.len() as f64
    }

    /// Mixture mean: the average of component means `a / (a + b)`.
    pub fn mean(&self) -> f64 {
        self.shapes.iter().map(|&(a, b)| a / (a + b)).sum::<f64>() / self.shapes.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_component_equals_conditional() {
        let mix = NPosteriorMass::new(60, vec![0.8]).unwrap();
        // Direct negative binomial pmf at k = 15.
        let k = 15.0f64;
        let x0 = 60.0f64;
        let expect = (ln_gamma(x0 + k) - ln_gamma(k + 1.0) - ln_gamma(x0)
            + x0 * 0.8f64.ln()
            + k * 0.2f64.ln())
        .exp();
        assert_abs_diff_eq!(mix.pmf(75), expect, epsilon = 1e-15);
        assert_eq!(mix.pmf(59), 0.0);
    }

    #[test]
    fn mass_normalizes() {
        let mix = NPosteriorMass::new(60, vec![0.6, 0.7, 0.85]).unwrap();
        assert_abs_diff_eq!(mix.total_mass(1e-12), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn beta_mixture_mean_is_average_of_means() {
        let shapes = vec![(3.0, 5.0), (10.0, 2.0), (7.0, 7.0)];
        let mix = BetaMixture::new(shapes.clone()).unwrap();
        let expect = shapes.iter().map(|(a, b)| a / (a + b)).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(mix.mean(), expect, epsilon = 1e-9);
    }

    #[test]
    fn beta_mixture_integrates_to_one() {
        let mix = BetaMixture::new(vec![(51.0, 41.0), (48.0, 60.0)]).unwrap();
        // Trapezoid over a fine grid.
        let grid = 200_000;
        let h = 1.0 / grid as f64;
        let mut total = 0.0;
        for i in 0..grid {
            let a = i as f64 * h;
            total += 0.5 * (mix.pdf(a) + mix.pdf(a + h)) * h;
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(
            NPosteriorMass::new(60, vec![]),
            Err(DrsError::EmptySample)
        ));
        assert!(matches!(BetaMixture::new(vec![]), Err(DrsError::EmptySample)));
    }
}
