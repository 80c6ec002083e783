use super::fit::IAC_CONVENTION;
use super::CliError;
use crate::diagnostics::{ess, iac, lpml, mean_var, Iac};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnReport {
    pub chain: usize,
    pub column: String,
    pub draws: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub iac: Iac,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub columns: Vec<ColumnReport>,
    /// From `logpred.csv`, pooled over chains.
    pub lpml: Option<f64>,
    pub iac_convention: String,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| bad(format!("row {}: cannot parse '{f}'", i + 2))))
            .collect::<Result<_, _>>()?;
        if row.len() != header.len() {
            return Err(bad(format!("row {}: {} fields, expected {}", i + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// IAC, ESS, mean and SD of every column of `trace.csv` per chain (a missing
/// `chain` column means one chain), and LPML from `logpred.csv` when present.
/// The report is also written to `report.json`.
pub fn cmd_diagnose(dir: &Path) -> Result<DiagnoseReport, CliError> {
    let t = read_table(&dir.join("trace.csv"))?;
    let chain_col = t.header.iter().position(|h| h == "chain");
    let mut by_chain: BTreeMap<usize, Vec<&Vec<f64>>> = BTreeMap::new();
    for r in &t.rows {
        let c = chain_col.map_or(1, |j| r[j] as usize);
        by_chain.entry(c).or_default().push(r);
    }
    let mut columns = Vec::new();
    for (&chain, rows) in &by_chain {
        for (j, name) in t.header.iter().enumerate() {
            if matches!(name.as_str(), "chain" | "iter" | "iteration") {
                continue;
            }
            let x: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (mean, var) = mean_var(&x);
            columns.push(ColumnReport {
                chain,
                column: name.clone(),
                draws: x.len(),
                mean: mean.is_finite().then_some(mean),
                sd: var.is_finite().then(|| var.sqrt()),
                iac: iac(&x),
                ess: ess(&x),
            });
        }
    }
    let lp_path = dir.join("logpred.csv");
    let lpml = if lp_path.exists() {
        let lp = read_table(&lp_path)?;
        let skip = lp.header.iter().take_while(|h| matches!(h.as_str(), "chain" | "iter" | "iteration")).count();
        let rows: Vec<Vec<f64>> = lp.rows.into_iter().map(|r| r[skip..].to_vec()).collect();
        (!rows.is_empty()).then(|| lpml(&rows))
    } else {
        None
    };
    let report = DiagnoseReport { columns, lpml, iac_convention: IAC_CONVENTION.into() };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), json).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(report)
}
