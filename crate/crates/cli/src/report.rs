use brinklab::transport::fit_power_law;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Abscissa of a log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitVariable {
    N,
    Eps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub quantity: String,
    pub eps: f64,
    pub n: usize,
    pub statistic: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Independent estimate of the same quantity (oracle or exact value).
    pub reference: Option<f64>,
    /// Value of the bound the statistic is compared against.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub quantity: String,
    pub variable: FitVariable,
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub kind: String,
    pub provenance: Provenance,
    pub rows: Vec<Row>,
    pub fits: Vec<FitSummary>,
    pub checks: Vec<Check>,
}

pub const TSV_HEADER: &str = "config_hash\tquantity\teps\tN\tstatistic\tci_low\tci_high\treference\tbound";

/// Which quantities get a log-log fit, and against what.
pub fn fit_variable(quantity: &str) -> Option<FitVariable> {
    match quantity {
        "nn_mean" | "w2_sq" | "hneg1" | "gap" | "gap_ratio" => Some(FitVariable::N),
        "w_minus_id_l2sq" | "grad_l2sq" | "w_minus_id_l3cube" | "eta_moment" | "drag_error" => Some(FitVariable::Eps),
        _ => None,
    }
}

/// Power-law fits for every fitted quantity with at least three rows.
pub fn compute_fits(rows: &[Row]) -> Vec<FitSummary> {
    let mut quantities: Vec<&str> = Vec::new();
    for r in rows {
        if !quantities.contains(&r.quantity.as_str()) {
            quantities.push(&r.quantity);
        }
    }
    let mut out = Vec::new();
    for q in quantities {
        let Some(var) = fit_variable(q) else { continue };
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.quantity == q)
            .map(|r| (if var == FitVariable::N { r.n as f64 } else { r.eps }, r.statistic))
            .collect();
        if let Ok(fit) = fit_power_law(&pairs) {
            out.push(FitSummary {
                quantity: q.to_string(),
                variable: var,
                slope: fit.slope,
                intercept: fit.intercept,
                slope_ci: fit.slope_ci,
            });
        }
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ScalingReport {
    pub fn fit(&self, quantity: &str) -> Option<&FitSummary> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        s.push_str(TSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.provenance.config_hash,
                r.quantity,
                r.eps,
                r.n,
                r.statistic,
                r.ci_low,
                r.ci_high,
                opt(r.reference),
                opt(r.bound)
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Rows of a TSV written by [`ScalingReport::to_tsv`], with the config hash
/// of each.
pub fn parse_tsv(text: &str) -> Result<Vec<(String, Row)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TSV_HEADER => {}
        _ => return Err("missing or unexpected header".into()),
    }
    let num = |s: &str, line: usize| -> Result<f64, String> { s.parse::<f64>().map_err(|e| format!("line {line}: {e}")) };
    let optional = |s: &str, line: usize| -> Result<Option<f64>, String> {
        if s == "NA" {
            Ok(None)
        } else {
            num(s, line).map(Some)
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(format!("line {lineno}: expected 9 fields, got {}", f.len()));
        }
        out.push((
            f[0].to_string(),
            Row {
                quantity: f[1].to_string(),
                eps: num(f[2], lineno)?,
                n: f[3].parse().map_err(|e| format!("line {lineno}: {e}"))?,
                statistic: num(f[4], lineno)?,
                ci_low: num(f[5], lineno)?,
                ci_high: num(f[6], lineno)?,
                reference: optional(f[7], lineno)?,
                bound: optional(f[8], lineno)?,
            },
        ));
    }
    Ok(out)
}
