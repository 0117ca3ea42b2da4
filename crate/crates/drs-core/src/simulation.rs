//! Hypothetical-population construction, multinomial data generation,
//! and the replication study harness.
//!
//! Eight built-in populations of size 500 cover both behavioral
//! directions crossed with the practically relevant marginal layouts.
//! A study draws a dataset per replicate, runs the configured engine,
//! and aggregates mean estimate, sample standard error, root mean
//! square error, averaged credible interval, and coverage.

use crate::error::{DrsError, Result};
use crate::estimators::{run_estimate, MethodConfig};
use crate::model::{cell_probs, p_from_marginals, DrsTable};
use crate::rng::{streams, RandomSource};
use rand::Rng;
use rayon::prelude::*;

/// One population setting: true size plus the marginal capture layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub name: String,
    pub n_true: u64,
    pub phi: f64,
    pub p1: f64,
    pub p_dot1: f64,
    /// Published expected-capture integer for the built-in populations,
    /// kept as reference data for reproduction output.
    pub published_e_x0: Option<u32>,
}

impl PopulationSpec {
    pub fn custom(name: &str, n_true: u64, phi: f64, p1: f64, p_dot1: f64) -> Self {
        Self {
            name: name.to_string(),
            n_true,
            phi,
            p1,
            p_dot1,
            published_e_x0: None,
        }
    }
}

/// The eight built-in populations (N = 500).
pub fn builtin_populations() -> Vec<PopulationSpec> {
    let rows: [(&str, f64, f64, f64, u32); 8] = [
        ("P1", 1.25, 0.50, 0.65, 394),
        ("P2", 1.25, 0.60, 0.70, 422),
        ("P3", 1.25, 0.80, 0.70, 458),
        ("P4", 1.25, 0.70, 0.55, 420),
        ("P5", 0.80, 0.50, 0.65, 430),
        ("P6", 0.80, 0.60, 0.70, 459),
        ("P7", 0.80, 0.80, 0.70, 483),
        ("P8", 0.80, 0.70, 0.55, 446),
    ];
    rows.iter()
        .map(|&(name, phi, p1, p_dot1, e_x0)| PopulationSpec {
            name: name.to_string(),
            n_true: 500,
            phi,
            p1,
            p_dot1,
            published_e_x0: Some(e_x0),
        })
        .collect()
}

/// Looks up a built-in population by name (case-insensitive).
pub fn builtin_population(name: &str) -> Option<PopulationSpec> {
    builtin_populations()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Expected number of distinct captured individuals,
/// `N * (1 - p00)` under the spec's cell probabilities.
pub fn expected_x0(spec: &PopulationSpec) -> Result<f64> {
    let p = p_from_marginals(spec.p1, spec.p_dot1, spec.phi)?;
    let cells = cell_probs(spec.p1, p, spec.phi)?;
    Ok(spec.n_true as f64 * (1.0 - cells.p00))
}

/// One multinomial draw of the four cells; only the observed three are
/// returned.
pub fn generate_dataset(spec: &PopulationSpec, rng: &mut RandomSource) -> Result<DrsTable> {
    let p = p_from_marginals(spec.p1, spec.p_dot1, spec.phi)?;
    let cells = cell_probs(spec.p1, p, spec.phi)?;
    // Sequential binomial decomposition of the multinomial.
    let mut remaining = spec.n_true;
    let mut left = 1.0;
    let mut counts = [0u64; 3];
    for (slot, prob) in [cells.p11, cells.p10, cells.p01].into_iter().enumerate() {
        let cond = (prob / left).clamp(0.0, 1.0);
        let mut hits = 0u64;
        for _ in 0..remaining {
            if rng.random::<f64>() < cond {
                hits += 1;
            }
        }
        counts[slot] = hits;
        remaining -= hits;
        left -= prob;
    }
    // At least one observation is required downstream; an all-miss draw
    // is possible in principle but has negligible probability for any
    // realistic setting, so it surfaces as an error.
    DrsTable::new(counts[0] as i64, counts[1] as i64, counts[2] as i64)
}

/// Per-replicate record: the point estimate and credible interval, or
/// the failure that excluded the replicate.
#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub replicate: u32,
    pub n_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub failure: Option<String>,
}

/// Study-level aggregation across replicates.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub mean_estimate: f64,
    /// Sample standard deviation of the replicate estimates.
    pub sample_se: f64,
    /// Root mean squared deviation from the true size.
    pub rmse: f64,
    /// Percent of replicate credible intervals containing the truth.
    pub coverage_pct: f64,
    /// Average of the replicate credible intervals.
    pub ci: (f64, f64),
    pub n_reps: usize,
    pub failed_reps: usize,
    pub records: Vec<ReplicateRecord>,
}

/// Runs `n_reps` independent replicates of dataset generation plus
/// estimation and aggregates the results. Replicate `r` draws its data
/// from stream `r` of the configured seed and its chains from streams
/// derived from `(r, chain)`, so results are bit-reproducible and
/// independent of worker scheduling.
pub fn run_study(
    spec: &PopulationSpec,
    config: &MethodConfig,
    n_reps: usize,
    workers: usize,
) -> Result<StudyResult> {
    if n_reps < 2 {
        return Err(DrsError::Domain(format!(
            "a study needs at least 2 replicates, got {n_reps}"
        )));
    }
    // Surface infeasible specs before spawning work.
    expected_x0(spec)?;

    let run_one = |r: usize| -> ReplicateRecord {
        let base = RandomSource::new(config.seed, streams::replicate(r as u32));
        let mut data_rng = base.clone();
        let outcome = generate_dataset(spec, &mut data_rng)
            .and_then(|table| run_estimate(&table, config, 0.95, &base));
        match outcome {
            Ok(est) => ReplicateRecord {
                replicate: r as u32,
                n_hat: est.n_summary.mean,
                ci_low: est.n_summary.ci_low,
                ci_high: est.n_summary.ci_high,
                failure: None,
            },
            Err(e) => ReplicateRecord {
                replicate: r as u32,
                n_hat: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                failure: Some(e.to_string()),
            },
        }
    };

    let records: Vec<ReplicateRecord> = if workers == 1 {
        (0..n_reps).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| DrsError::Domain(format!("worker pool: {e}")))?;
        pool.install(|| (0..n_reps).into_par_iter().map(run_one).collect())
    };

    Ok(aggregate(spec.n_true, records))
}

fn aggregate(n_true: u64, records: Vec<ReplicateRecord>) -> StudyResult {
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let failed_reps = records.len() - ok.len();
    let truth = n_true as f64;
    if ok.is_empty() {
        return StudyResult {
            mean_estimate: f64::NAN,
            sample_se: f64::NAN,
            rmse: f64::NAN,
            coverage_pct: f64::NAN,
            ci: (f64::NAN, f64::NAN),
            n_reps: records.len(),
            failed_reps,
            records,
        };
    }
    let k = ok.len() as f64;
    let mean_estimate = ok.iter().map(|r| r.n_hat).sum::<f64>() / k;
    let sample_se = if ok.len() == 1 {
        0.0
    } else {
        (ok.iter()
            .map(|r| (r.n_hat - mean_estimate).powi(2))
            .sum::<f64>()
            / (k - 1.0))
            .sqrt()
    };
    let rmse = (ok.iter().map(|r| (r.n_hat - truth).powi(2)).sum::<f64>() / k).sqrt();
    let covered = ok
        .iter()
        .filter(|r| r.ci_low <= truth && truth <= r.ci_high)
        .count() as f64;
    let coverage_pct = 100.0 * covered / k;
    let ci = (
        ok.iter().map(|r| r.ci_low).sum::<f64>() / k,
        ok.iter().map(|r| r.ci_high).sum::<f64>() / k,
    );
    StudyResult {
        mean_estimate,
        sample_se,
        rmse,
        coverage_pct,
        ci,
        n_reps: records.len(),
        failed_reps,
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_rows_match_published_table() {
        let pops = builtin_populations();
        assert_eq!(pops.len(), 8);
        let expected = [
            ("P1", 1.25, 0.50, 0.65, 394u32),
            ("P2", 1.25, 0.60, 0.70, 422),
            ("P3", 1.25, 0.80, 0.70, 458),
            ("P4", 1.25, 0.70, 0.55, 420),
            ("P5", 0.80, 0.50, 0.65, 430),
            ("P6", 0.80, 0.60, 0.70, 459),
            ("P7", 0.80, 0.80, 0.70, 483),
            ("P8", 0.80, 0.70, 0.55, 446),
        ];
        for (pop, &(name, phi, p1, pd1, e)) in pops.iter().zip(&expected) {
            assert_eq!(pop.name, name);
            assert_eq!(pop.n_true, 500);
            assert_eq!(pop.phi, phi);
            assert_eq!(pop.p1, p1);
            assert_eq!(pop.p_dot1, pd1);
            assert_eq!(pop.published_e_x0, Some(e));
        }
    }

    #[test]
    fn expected_x0_anchor_values() {
        let pops = builtin_populations();
        assert_abs_diff_eq!(expected_x0(&pops[0]).unwrap(), 394.4444444, epsilon = 1e-6);
        assert_abs_diff_eq!(expected_x0(&pops[4]).unwrap(), 430.5555556, epsilon = 1e-6);
        // Independence arithmetic: 500 * (1 - 0.25).
        let spec = PopulationSpec::custom("ind", 500, 1.0, 0.5, 0.5);
        assert_abs_diff_eq!(expected_x0(&spec).unwrap(), 375.0, epsilon = 1e-9);
    }

    #[test]
    fn generated_cells_respect_partition() {
        let spec = builtin_population("P1").unwrap();
        let mut rng = RandomSource::new(3, 0);
        for _ in 0..200 {
            let t = generate_dataset(&spec, &mut rng).unwrap();
            assert!(t.x0() <= spec.n_true);
        }
    }

    #[test]
    fn generated_mean_x0_matches_expectation() {
        let spec = builtin_population("P1").unwrap();
        let expect = expected_x0(&spec).unwrap();
        let mut rng = RandomSource::new(4, 0);
        let reps = 10_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            sum += generate_dataset(&spec, &mut rng).unwrap().x0() as f64;
        }
        let mean = sum / reps as f64;
        // Binomial variance bound: sd of x0 <= sqrt(N)/2.
        let se = (spec.n_true as f64).sqrt() / 2.0 / (reps as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} expect {expect} se {se}"
        );
    }

    #[test]
    fn structural_zero_when_list1_is_certain() {
        // p1 = 1 forces x01 = 0; feasible only with phi < 1 so that
        // the recapture probability stays inside (0, 1).
        let spec = PopulationSpec::custom("edge", 200, 0.8, 1.0 - 1e-9, 0.5);
        let mut rng = RandomSource::new(5, 0);
        for _ in 0..50 {
            let t = generate_dataset(&spec, &mut rng).unwrap();
            assert_eq!(t.x01(), 0);
        }
    }

    #[test]
    fn aggregation_handles_oracle_estimator() {
        // Records that echo the truth exactly: rmse = se = 0, full coverage.
        let records: Vec<ReplicateRecord> = (0..10)
            .map(|r| ReplicateRecord {
                replicate: r,
                n_hat: 500.0,
                ci_low: 490.0,
                ci_high: 510.0,
                failure: None,
            })
            .collect();
        let res = aggregate(500, records);
        assert_eq!(res.mean_estimate, 500.0);
        assert_eq!(res.sample_se, 0.0);
        assert_eq!(res.rmse, 0.0);
        assert_eq!(res.coverage_pct, 100.0);
        assert_eq!(res.failed_reps, 0);
    }

    #[test]
    fn aggregation_is_order_invariant() {
        let mk = |r: u32, n: f64| ReplicateRecord {
            replicate: r,
            n_hat: n,
            ci_low: n - 5.0,
            ci_high: n + 5.0,
            failure: None,
        };
        let a = aggregate(500, vec![mk(0, 490.0), mk(1, 505.0), mk(2, 512.0)]);
        let b = aggregate(500, vec![mk(2, 512.0), mk(0, 490.0), mk(1, 505.0)]);
        assert_eq!(a.mean_estimate, b.mean_estimate);
        assert_eq!(a.sample_se, b.sample_se);
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.coverage_pct, b.coverage_pct);
    }

    #[test]
    fn bias_variance_identity() {
        let mk = |r: u32, n: f64| ReplicateRecord {
            replicate: r,
            n_hat: n,
            ci_low: n - 5.0,
            ci_high: n + 5.0,
            failure: None,
        };
        let vals = [480.0, 495.0, 510.0, 525.0, 502.0];
        let res = aggregate(
            500,
            vals.iter()
                .enumerate()
                .map(|(i, &v)| mk(i as u32, v))
                .collect(),
        );
        let k = vals.len() as f64;
        let lhs = res.rmse.powi(2);
        let rhs = res.sample_se.powi(2) * (k - 1.0) / k
            + (res.mean_estimate - 500.0).powi(2);
        assert!((lhs - rhs).abs() < 1e-6 * 500.0 * 500.0);
    }
}
