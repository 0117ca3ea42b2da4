//! Domain types and closed-form results for two-list capture data.
//!
//! A dual-record system cross-classifies one closed population by
//! presence in two lists. Three cells are observed (`x11`, `x10`,
//! `x01`); the never-captured cell is missing, which is what makes the
//! population size `N` unknown. Under time variation alone the lists
//! are independent and `N` has a closed-form MLE; adding a behavioral
//! response effect `phi` (recapture probability `c = phi * p`) yields
//! the richer model whose likelihood lives here.

use crate::error::{DrsError, Result};
use statrs::function::gamma::ln_gamma;

/// Observed 2x2 table with the never-captured cell missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DrsTable {
    x11: u64,
    x10: u64,
    x01: u64,
}

impl DrsTable {
    /// Validates raw cell counts and derives the margins.
    pub fn new(x11: i64, x10: i64, x01: i64) -> Result<Self> {
        for (field, value) in [("x11", x11), ("x10", x10), ("x01", x01)] {
            if value < 0 {
                return Err(DrsError::NegativeCount { field, value });
            }
        }
        if x11 == 0 && x10 == 0 && x01 == 0 {
            return Err(DrsError::EmptyTable);
        }
        Ok(Self {
            x11: x11 as u64,
            x10: x10 as u64,
            x01: x01 as u64,
        })
    }

    /// Captured by both lists.
    pub fn x11(&self) -> u64 {
        self.x11
    }

    /// Captured by list 1 only.
    pub fn x10(&self) -> u64 {
        self.x10
    }

    /// Captured by list 2 only.
    pub fn x01(&self) -> u64 {
        self.x01
    }

    /// List-1 total `x1. = x11 + x10`.
    pub fn x1dot(&self) -> u64 {
        self.x11 + self.x10
    }

    /// List-2 total `x.1 = x11 + x01`.
    pub fn xdot1(&self) -> u64 {
        self.x11 + self.x01
    }

    /// Distinct captured individuals `x0 = x11 + x10 + x01`.
    pub fn x0(&self) -> u64 {
        self.x11 + self.x10 + self.x01
    }

    /// Empirical recapture rate `c-hat = x11 / x1.`, the MLE of `c`.
    pub fn c_hat(&self) -> f64 {
        self.x11 as f64 / self.x1dot() as f64
    }
}

/// Parameter state of the behavioral-response model: population size,
/// list-1 capture probability, conditional list-2 capture probability
/// given a list-1 miss, and the behavioral response effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtbParams {
    pub n: u64,
    pub p1: f64,
    pub p: f64,
    pub phi: f64,
}

impl MtbParams {
    /// Validates `0 < p1 < 1`, `0 < p < 1`, `phi > 0` and `phi * p < 1`.
    pub fn new(n: u64, p1: f64, p: f64, phi: f64) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(DrsError::Domain(format!("p1 = {p1} outside (0, 1)")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(DrsError::Domain(format!("p = {p} outside (0, 1)")));
        }
        if !(phi > 0.0) {
            return Err(DrsError::Domain(format!("phi = {phi} must be positive")));
        }
        if phi * p >= 1.0 {
            return Err(DrsError::Domain(format!(
                "recapture probability phi*p = {} outside (0, 1)",
                phi * p
            )));
        }
        Ok(Self { n, p1, p, phi })
    }

    /// Recapture probability `c = phi * p`.
    pub fn recapture_prob(&self) -> f64 {
        self.phi * self.p
    }

    /// Probability of being captured by at least one list,
    /// `mu = 1 - (1 - p)(1 - p1)`.
    pub fn any_capture_prob(&self) -> f64 {
        1.0 - (1.0 - self.p) * (1.0 - self.p1)
    }

    /// Log-likelihood of the behavioral-response model, up to the
    /// additive constant that collects the multinomial coefficient of
    /// the observed cells. The `N!/(N - x0)!` ratio is evaluated with
    /// log-gamma so sizes up to 1e9 do not overflow.
    pub fn log_likelihood(&self, table: &DrsTable) -> Result<f64> {
        let x0 = table.x0();
        if self.n < x0 {
            return Err(DrsError::Domain(format!(
                "N = {} smaller than the {} observed individuals",
                self.n, x0
            )));
        }
        let n = self.n as f64;
        let c = self.recapture_prob();
        let mut ll = ln_gamma(n + 1.0) - ln_gamma(n - x0 as f64 + 1.0);
        ll += table.x11() as f64 * self.phi.ln();
        ll += table.x1dot() as f64 * self.p1.ln();
        ll += table.xdot1() as f64 * self.p.ln();
        ll += (n - table.x1dot() as f64) * (-self.p1).ln_1p();
        ll += (n - x0 as f64) * (-self.p).ln_1p();
        if table.x10() > 0 {
            ll += table.x10() as f64 * (-c).ln_1p();
        }
        Ok(ll)
    }
}

/// Expected proportions of the four table cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbs {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CellProbs {
    /// Cross-product ratio `p11 * p00 / (p01 * p10)`; equals 1 exactly
    /// when the lists are independent (`phi = 1`).
    pub fn cross_product_ratio(&self) -> f64 {
        self.p11 * self.p00 / (self.p01 * self.p10)
    }
}

/// Cell probabilities implied by `(p1, p, phi)`:
/// `p11 = p1 * phi * p`, `p10 = p1 * (1 - phi * p)`,
/// `p01 = (1 - p1) * p`, `p00 = (1 - p1)(1 - p)`.
pub fn cell_probs(p1: f64, p: f64, phi: f64) -> Result<CellProbs> {
    if !(p1 > 0.0 && p1 < 1.0 && p > 0.0 && p < 1.0 && phi > 0.0) {
        return Err(DrsError::Domain(format!(
            "cell probabilities need p1, p in (0,1) and phi > 0; got ({p1}, {p}, {phi})"
        )));
    }
    let c = phi * p;
    if c >= 1.0 {
        return Err(DrsError::Domain(format!(
            "recapture probability phi*p = {c} outside (0, 1)"
        )));
    }
    Ok(CellProbs {
        p11: p1 * c,
        p10: p1 * (1.0 - c),
        p01: (1.0 - p1) * p,
        p00: (1.0 - p1) * (1.0 - p),
    })
}

/// Inverts the marginal identity `p.1 = p * (1 + (phi - 1) * p1)` for
/// the conditional probability `p`. This is how population settings
/// stated in terms of marginals are translated into model rates.
pub fn p_from_marginals(p1: f64, p_dot1: f64, phi: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0 && p_dot1 > 0.0 && p_dot1 < 1.0 && phi > 0.0) {
        return Err(DrsError::Domain(format!(
            "marginals need p1, p.1 in (0,1) and phi > 0; got ({p1}, {p_dot1}, {phi})"
        )));
    }
    let p = p_dot1 / (1.0 + (phi - 1.0) * p1);
    if !(p > 0.0 && p < 1.0) {
        return Err(DrsError::InfeasibleMarginals(format!(
            "implied p = {p} outside (0, 1)"
        )));
    }
    if phi * p >= 1.0 {
        return Err(DrsError::InfeasibleMarginals(format!(
            "implied recapture probability phi*p = {} outside (0, 1)",
            phi * p
        )));
    }
    Ok(p)
}

/// Closed-form estimates under list independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtEstimate {
    /// `x.1 * x1. / x11`, returned unrounded.
    pub n_hat: f64,
    /// `x11 / x.1`.
    pub p1_hat: f64,
    /// `x11 / x1.`.
    pub p_dot1_hat: f64,
}

/// Maximum-likelihood estimates of the independence model. Requires
/// `x11 >= 1`; with zero overlap the estimator is undefined.
pub fn mt_mle(table: &DrsTable) -> Result<MtEstimate> {
    if table.x11() == 0 {
        return Err(DrsError::ZeroOverlap);
    }
    let x11 = table.x11() as f64;
    Ok(MtEstimate {
        n_hat: table.xdot1() as f64 * table.x1dot() as f64 / x11,
        p1_hat: x11 / table.xdot1() as f64,
        p_dot1_hat: x11 / table.x1dot() as f64,
    })
}

/// Log-likelihood of the independence model at `(n, p1, p_dot1)`, up to
/// the same additive constant convention as
/// [`MtbParams::log_likelihood`].
pub fn loglik_mt(n: u64, p1: f64, p_dot1: f64, table: &DrsTable) -> Result<f64> {
    let x0 = table.x0();
    if n < x0 {
        return Err(DrsError::Domain(format!(
            "N = {n} smaller than the {x0} observed individuals"
        )));
    }
    if !(p1 > 0.0 && p1 < 1.0 && p_dot1 > 0.0 && p_dot1 < 1.0) {
        return Err(DrsError::Domain(format!(
            "capture probabilities ({p1}, {p_dot1}) outside (0, 1)"
        )));
    }
    let nf = n as f64;
    let mut ll = ln_gamma(nf + 1.0) - ln_gamma(nf - x0 as f64 + 1.0);
    ll += table.x1dot() as f64 * p1.ln();
    ll += table.xdot1() as f64 * p_dot1.ln();
    ll += (nf - table.x1dot() as f64) * (-p1).ln_1p();
    ll += (nf - table.xdot1() as f64) * (-p_dot1).ln_1p();
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn table_margins() {
        let t = DrsTable::new(30, 20, 10).unwrap();
        assert_eq!(t.x1dot(), 50);
        assert_eq!(t.xdot1(), 40);
        assert_eq!(t.x0(), 60);
    }

    #[test]
    fn table_full_overlap() {
        let t = DrsTable::new(50, 0, 0).unwrap();
        assert_eq!(t.x1dot(), 50);
        assert_eq!(t.xdot1(), 50);
        assert_eq!(t.x0(), 50);
    }

    #[test]
    fn table_rejects_degenerate_inputs() {
        assert_eq!(DrsTable::new(0, 0, 0), Err(DrsError::EmptyTable));
        assert!(matches!(
            DrsTable::new(-1, 2, 3),
            Err(DrsError::NegativeCount { field: "x11", .. })
        ));
    }

    #[test]
    fn mt_mle_complete_capture() {
        let t = DrsTable::new(50, 0, 0).unwrap();
        let est = mt_mle(&t).unwrap();
        assert_eq!(est.n_hat, 50.0);
        assert_eq!(est.p1_hat, 1.0);
        assert_eq!(est.p_dot1_hat, 1.0);
    }

    #[test]
    fn mt_mle_hand_evaluated() {
        // x.1 = 40, x1. = 50, x11 = 30: N-hat = 40*50/30.
        let t = DrsTable::new(30, 20, 10).unwrap();
        let est = mt_mle(&t).unwrap();
        assert_abs_diff_eq!(est.n_hat, 2000.0 / 30.0, epsilon = 1e-12);
        assert_eq!(est.p1_hat, 0.75);
        assert_eq!(est.p_dot1_hat, 0.6);
    }

    #[test]
    fn mt_mle_needs_overlap() {
        let t = DrsTable::new(0, 20, 10).unwrap();
        assert_eq!(mt_mle(&t), Err(DrsError::ZeroOverlap));
    }

    #[test]
    fn params_reject_unit_recapture() {
        let err = MtbParams::new(100, 0.5, 0.8, 1.5).unwrap_err();
        assert!(matches!(err, DrsError::Domain(_)));
    }

    #[test]
    fn loglik_reduces_to_independence_at_phi_one() {
        let t = DrsTable::new(30, 20, 10).unwrap();
        for &n in &[60u64, 80, 120, 400] {
            for &p1 in &[0.2, 0.5, 0.8] {
                for &p in &[0.3, 0.5, 0.7] {
                    let params = MtbParams::new(n, p1, p, 1.0).unwrap();
                    let tb = params.log_likelihood(&t).unwrap();
                    let mt = loglik_mt(n, p1, p, &t).unwrap();
                    assert_abs_diff_eq!(tb, mt, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn loglik_direct_summation_oracle() {
        // Term-by-term evaluation with a plain falling-factorial loop.
        let t = DrsTable::new(30, 20, 10).unwrap();
        let params = MtbParams::new(100, 0.5, 0.5, 1.25).unwrap();
        let got = params.log_likelihood(&t).unwrap();

        let (n, x0) = (100u64, t.x0());
        let mut expect = 0.0;
        for i in 0..x0 {
            expect += ((n - i) as f64).ln();
        }
        expect += t.x11() as f64 * 1.25f64.ln();
        expect += t.x1dot() as f64 * 0.5f64.ln();
        expect += t.xdot1() as f64 * 0.5f64.ln();
        expect += (n - t.x1dot()) as f64 * 0.5f64.ln();
        expect += (n - x0) as f64 * 0.5f64.ln();
        expect += t.x10() as f64 * (1.0 - 1.25 * 0.5f64).ln();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-9);
    }

    #[test]
    fn loglik_rejects_small_n() {
        let t = DrsTable::new(30, 20, 10).unwrap();
        let params = MtbParams::new(59, 0.5, 0.5, 1.0).unwrap();
        assert!(params.log_likelihood(&t).is_err());
    }

    #[test]
    fn loglik_strictly_concave_in_p() {
        // Negative second differences across the support, several shapes.
        let t = DrsTable::new(30, 20, 10).unwrap();
        for &phi in &[0.8, 1.0, 1.25] {
            let hi = (1.0f64).min(1.0 / phi) - 1e-6;
            let grid = 200;
            let h = (hi - 1e-6) / grid as f64;
            let ll = |p: f64| {
                MtbParams::new(100, 0.5, p, phi)
                    .unwrap()
                    .log_likelihood(&t)
                    .unwrap()
            };
            for i in 1..grid {
                let p = 1e-6 + i as f64 * h;
                let second = ll(p + h) - 2.0 * ll(p) + ll(p - h);
                assert!(second < 0.0, "second difference {second} at p = {p}");
            }
        }
    }

    #[test]
    fn marginal_inversion_examples() {
        // Independence: p equals the marginal.
        assert_abs_diff_eq!(p_from_marginals(0.5, 0.65, 1.0).unwrap(), 0.65);
        // Algebraic inversions, hand-checked.
        assert_abs_diff_eq!(
            p_from_marginals(0.5, 0.65, 1.25).unwrap(),
            0.65 / 1.125,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            p_from_marginals(0.8, 0.7, 1.25).unwrap(),
            0.7 / 1.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn marginal_inversion_rejects_infeasible() {
        // phi large enough that the implied recapture probability exceeds 1.
        let err = p_from_marginals(0.05, 0.9, 12.0).unwrap_err();
        assert!(matches!(err, DrsError::InfeasibleMarginals(_)));
    }

    #[test]
    fn cell_probs_symmetric_independence() {
        let c = cell_probs(0.5, 0.5, 1.0).unwrap();
        for v in [c.p11, c.p10, c.p01, c.p00] {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn cell_probs_hand_case() {
        let p = p_from_marginals(0.5, 0.65, 1.25).unwrap();
        let c = cell_probs(0.5, p, 1.25).unwrap();
        assert_abs_diff_eq!(c.p00, 0.211111, epsilon = 5e-7);
        assert_abs_diff_eq!(c.p11 + c.p10 + c.p01 + c.p00, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_product_ratio_is_one_iff_independent() {
        let c = cell_probs(0.37, 0.61, 1.0).unwrap();
        assert_abs_diff_eq!(c.cross_product_ratio(), 1.0, epsilon = 1e-12);
        let c = cell_probs(0.37, 0.61, 1.25).unwrap();
        assert!((c.cross_product_ratio() - 1.0).abs() > 1e-3);
    }

    #[test]
    fn mle_moment_identities_exact_for_dyadic_cases() {
        // With power-of-two margins the fitted rates are dyadic, so the
        // identities hold exactly even in floating point.
        let t = DrsTable::new(16, 16, 16).unwrap();
        let est = mt_mle(&t).unwrap();
        assert_eq!(est.p1_hat * t.xdot1() as f64, t.x11() as f64);
        assert_eq!(est.p_dot1_hat * t.x1dot() as f64, t.x11() as f64);
        assert_eq!(est.n_hat * est.p1_hat * est.p_dot1_hat, t.x11() as f64);
    }
}
