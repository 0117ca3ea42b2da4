//! Run reports: the structured-text objects the CLI writes and reads
//! back losslessly.

use drs_core::{EstimateOutput, MtEstimate, Summary};
use serde::{Deserialize, Serialize};

/// Posterior summary block of one scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub mean: f64,
    pub se: f64,
    pub cv: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<Summary> for SummaryReport {
    fn from(s: Summary) -> Self {
        Self {
            mean: s.mean,
            se: s.se,
            cv: s.cv,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
        }
    }
}

/// One estimation run over one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub method: String,
    pub prior: String,
    pub seed: u64,
    pub n: SummaryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<SummaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_dot1_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    pub iterations: u64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn from_estimate(
        label: Option<String>,
        seed: u64,
        prior_label: String,
        out: &EstimateOutput,
    ) -> Self {
        Self {
            label,
            method: out.method.to_string(),
            prior: prior_label,
            seed,
            n: out.n_summary.into(),
            phi: out.phi_summary.map(Into::into),
            p_hat: out.p_hat,
            phi_hat: out.phi_hat,
            p1_hat: None,
            p_dot1_hat: None,
            burn_in: out.burn_in.map(|h| h as u64),
            iterations: out.iterations as u64,
            converged: out.converged,
            warnings: out.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }

    /// Closed-form report: a point estimate with a degenerate interval.
    pub fn from_mt(label: Option<String>, seed: u64, est: &MtEstimate) -> Self {
        Self {
            label,
            method: "mt".to_string(),
            prior: "none".to_string(),
            seed,
            n: SummaryReport {
                mean: est.n_hat,
                se: 0.0,
                cv: 0.0,
                ci_low: est.n_hat,
                ci_high: est.n_hat,
            },
            phi: None,
            p_hat: None,
            phi_hat: None,
            p1_hat: Some(est.p1_hat),
            p_dot1_hat: Some(est.p_dot1_hat),
            burn_in: None,
            iterations: 0,
            converged: true,
            warnings: Vec::new(),
        }
    }
}

/// Carrier for multi-table runs serialized as an array of tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: Vec<RunReport>,
}

/// Serializes one report (flat object) or several (array of tables).
pub fn render_reports(reports: &[RunReport]) -> Result<String, toml::ser::Error> {
    if reports.len() == 1 {
        toml::to_string_pretty(&reports[0])
    } else {
        toml::to_string_pretty(&ReportFile {
            report: reports.to_vec(),
        })
    }
}

/// Parses either shape back.
pub fn parse_reports(text: &str) -> Result<Vec<RunReport>, toml::de::Error> {
    if let Ok(single) = toml::from_str::<RunReport>(text) {
        return Ok(vec![single]);
    }
    toml::from_str::<ReportFile>(text).map(|f| f.report)
}

/// Diagnostics recomputed from a saved trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub chains: u64,
    pub iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    pub converged: bool,
    pub n: SummaryReport,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub h: u64,
    pub sqrt_rhat: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> RunReport {
        RunReport {
            label: Some("lilongwe".into()),
            method: "semwig".into(),
            prior: "U(1, 1/p)".into(),
            seed: 42,
            n: SummaryReport {
                mean: 372.125,
                se: 1.3,
                cv: 0.0034930555,
                ci_low: 370.0,
                ci_high: 374.5,
            },
            phi: Some(SummaryReport {
                mean: 1.16,
                se: 0.02,
                cv: 0.01724,
                ci_low: 1.11,
                ci_high: 1.2,
            }),
            p_hat: Some(0.5812),
            phi_hat: None,
            p1_hat: None,
            p_dot1_hat: None,
            burn_in: Some(1100),
            iterations: 2200,
            converged: true,
            warnings: vec!["degenerate-clip: 2 maximization step(s) hit a domain boundary".into()],
        }
    }

    #[test]
    fn report_round_trips_losslessly() {
        let report = sample_report();
        let text = render_reports(&[report.clone()]).unwrap();
        let back = parse_reports(&text).unwrap();
        assert_eq!(back, vec![report]);
    }

    #[test]
    fn multi_report_round_trips() {
        let a = sample_report();
        let mut b = sample_report();
        b.label = Some("other".into());
        b.n.mean = 2981.0;
        let text = render_reports(&[a.clone(), b.clone()]).unwrap();
        let back = parse_reports(&text).unwrap();
        assert_eq!(back, vec![a, b]);
    }
}
