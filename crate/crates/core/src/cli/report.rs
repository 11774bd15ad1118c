//! Report records and text tables.
//!
//! Machine output is JSON Lines. Every line carries a `kind`; only the final
//! `"kind":"timing"` line depends on the clock, so stripping it leaves a
//! byte-reproducible report.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::solver::{HyperParams, ObjectiveTerms};

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub seed: u64,
    pub algorithm: String,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub n_source: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_target: Option<usize>,
    pub dim: usize,
    pub bandwidth: Option<f64>,
    pub params: HyperParams,
    pub eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_history: Option<Vec<ObjectiveTerms>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudo_label_accuracy: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_accuracy: Option<f64>,
}

/// Collects JSON lines in order.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn push(&mut self, kind: &str, value: &impl Serialize) {
        let mut v = serde_json::to_value(value).expect("report records serialize");
        let line = match &mut v {
            serde_json::Value::Object(map) => {
                let mut tagged = serde_json::Map::new();
                tagged.insert("kind".into(), kind.into());
                tagged.append(map);
                serde_json::Value::Object(tagged)
            }
            other => serde_json::json!({ "kind": kind, "value": other }),
        };
        self.lines.push(line.to_string());
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Writes all records plus a trailing timing line.
    pub fn write(&self, path: &Path, wall_seconds: f64) -> std::io::Result<()> {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(&serde_json::json!({ "kind": "timing", "wall_seconds": wall_seconds }).to_string());
        out.push('\n');
        std::fs::write(path, out)
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn format_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: Vec<&str>| {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                let _ = write!(out, "{c:<w$}", w = widths[i]);
            } else {
                let _ = write!(out, "{c:>w$}", w = widths[i]);
            }
        }
        out.push('\n');
    };
    line(&mut out, header.to_vec());
    let rule: Vec<String> = widths.iter().take(cols).map(|w| "-".repeat(*w)).collect();
    line(&mut out, rule.iter().map(String::as_str).collect());
    for r in rows {
        line(&mut out, r.iter().map(String::as_str).collect());
    }
    out
}

/// `"best"`, `"second"` or `""` for each accuracy within one experiment.
/// Equal accuracies share a mark.
pub fn rank_marks(acc: &[f64]) -> Vec<&'static str> {
    let mut distinct: Vec<f64> = acc.to_vec();
    distinct.sort_by(|a, b| b.total_cmp(a));
    distinct.dedup();
    acc.iter()
        .map(|a| {
            if Some(a) == distinct.first() {
                "best"
            } else if Some(a) == distinct.get(1) {
                "second"
            } else {
                ""
            }
        })
        .collect()
}

pub fn pct(acc: f64) -> String {
    format!("{:.2}", 100.0 * acc)
}
