use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub notes: String,
}

impl Report {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: false,
            measured: BTreeMap::new(),
            tolerance,
            notes: String::new(),
        }
    }

    pub fn record(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.measured.insert(key.into(), value);
        self
    }

    pub fn note(&mut self, text: impl AsRef<str>) -> &mut Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.measured.get(key).copied()
    }

    /// Single line for terminal output.
    pub fn summary_line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut line = format!("{status} {}", self.name);
        if !self.notes.is_empty() {
            line.push_str(&format!(" ({})", self.notes));
        }
        line
    }

    /// Rows `name,key,value,tolerance,pass`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.measured
            .iter()
            .map(|(k, v)| format!("{},{},{:e},{:e},{}", self.name, k, v, self.tolerance, self.pass))
            .collect()
    }
}

pub const REPORT_CSV_HEADER: &str = "name,key,value,tolerance,pass";

/// Reports sorted by name as a JSON array.
pub fn reports_to_json(reports: &[Report]) -> serde_json::Result<String> {
    let mut sorted: Vec<&Report> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    serde_json::to_string_pretty(&sorted)
}

pub fn reports_to_csv(reports: &[Report]) -> String {
    let mut sorted: Vec<&Report> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in sorted {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
