//! File formats: table input (structured text or delimited), study
//! result tables, and iteration traces.
//!
//! All delimited output is comma-separated with a header row and LF
//! line endings; all structured text is UTF-8 TOML.

use crate::CliError;
use drs_core::{ChainSet, DrsTable, StudyResult};
use serde::Deserialize;
use std::fs;
use std::path::Path;

/// One table read from disk.
#[derive(Debug, Clone)]
pub struct NamedTable {
    pub label: Option<String>,
    pub table: DrsTable,
}

#[derive(Debug, Deserialize)]
struct TableFile {
    x11: i64,
    x10: i64,
    x01: i64,
    label: Option<String>,
}

/// Reads tables from a structured-text file (one object with keys
/// `x11`, `x10`, `x01` and optional `label`) or, when the path ends in
/// `.csv`, a delimited file with those columns.
pub fn read_tables(path: &Path) -> Result<Vec<NamedTable>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")) {
        read_tables_csv(&text)
    } else {
        let parsed: TableFile = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let table = DrsTable::new(parsed.x11, parsed.x10, parsed.x01)
            .map_err(|e| CliError::validation(e.to_string()))?;
        Ok(vec![NamedTable {
            label: parsed.label,
            table,
        }])
    }
}

fn read_tables_csv(text: &str) -> Result<Vec<NamedTable>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::validation(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (i11, i10, i01) = match (col("x11"), col("x10"), col("x01")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(CliError::validation(
                "header must name columns x11, x10, x01".to_string(),
            ))
        }
    };
    let ilabel = col("label");

    let mut out = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::validation(e.to_string()))?;
        let line = row_idx + 2; // header occupies line 1
        let parse = |idx: usize, name: &str| -> Result<i64, CliError> {
            let raw = record.get(idx).ok_or_else(|| {
                CliError::validation(format!("line {line}: missing field {name}"))
            })?;
            raw.parse::<i64>().map_err(|_| {
                CliError::validation(format!("line {line}: field {name} = {raw:?} is not an integer"))
            })
        };
        let table = DrsTable::new(parse(i11, "x11")?, parse(i10, "x10")?, parse(i01, "x01")?)
            .map_err(|e| CliError::validation(format!("line {line}: {e}")))?;
        let label = ilabel
            .and_then(|i| record.get(i))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.push(NamedTable { label, table });
    }
    if out.is_empty() {
        return Err(CliError::validation("no table rows in input".to_string()));
    }
    Ok(out)
}

/// Header of study-result tables.
pub const STUDY_HEADER: &str =
    "population,method,prior,mean,se,rmse,ci_low,ci_high,coverage,failed_reps";

/// One study row in the delimited layout.
pub fn study_row(population: &str, method: &str, prior: &str, res: &StudyResult) -> String {
    format!(
        "{population},{method},{prior},{:.4},{:.4},{:.4},{:.4},{:.4},{:.1},{}",
        res.mean_estimate,
        res.sample_se,
        res.rmse,
        res.ci.0,
        res.ci.1,
        res.coverage_pct,
        res.failed_reps
    )
}

/// Writes an iteration trace: one row per chain per iteration with the
/// population draw, plus the scale-reduction value at checkpoint rows.
pub fn write_trace(path: &Path, set: &ChainSet) -> Result<(), CliError> {
    let mut out = String::from("h,chain,n,sqrt_rhat\n");
    let rhat_at = |h: usize| -> Option<f64> {
        set.rhat_trace
            .iter()
            .find(|(cp, _)| *cp == h)
            .map(|(_, r)| *r)
            .filter(|r| r.is_finite())
    };
    for (chain_idx, chain) in set.chains.iter().enumerate() {
        for (i, &n) in chain.n.iter().enumerate() {
            let h = i + 1;
            match rhat_at(h) {
                Some(r) => out.push_str(&format!("{h},{chain_idx},{n},{r:.6}\n")),
                None => out.push_str(&format!("{h},{chain_idx},{n},\n")),
            }
        }
    }
    fs::write(path, out).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Reads a trace back into per-chain population sequences.
pub fn read_trace(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut chains: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::validation(e.to_string()))?;
        let line = row_idx + 2;
        let field = |idx: usize, name: &str| -> Result<f64, CliError> {
            record
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| CliError::validation(format!("line {line}: bad field {name}")))
        };
        let chain = field(1, "chain")? as usize;
        let n = field(2, "n")?;
        while chains.len() <= chain {
            chains.push(Vec::new());
        }
        chains[chain].push(n);
    }
    if chains.is_empty() || chains.iter().any(|c| c.is_empty()) {
        return Err(CliError::validation("trace holds no draws".to_string()));
    }
    Ok(chains)
}
