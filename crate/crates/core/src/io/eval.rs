//! Precision and recall of query answers against truth labels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Ground-truth answers for named queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthDocument {
    pub format_version: u32,
    pub truths: Vec<TruthEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthEntry {
    pub query: String,
    pub answers: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub query: String,
    pub predicted: usize,
    pub truth: usize,
    pub hits: usize,
    /// 1 by convention when nothing was predicted; see `no_predictions`.
    pub precision: f64,
    /// 1 by convention when the truth set is empty.
    pub recall: f64,
    pub no_predictions: bool,
}

pub fn score(query: &str, predicted: &[String], truth: &[String]) -> Score {
    let p: BTreeSet<&String> = predicted.iter().collect();
    let t: BTreeSet<&String> = truth.iter().collect();
    let hits = p.intersection(&t).count();
    Score {
        query: query.to_string(),
        predicted: p.len(),
        truth: t.len(),
        hits,
        precision: if p.is_empty() { 1.0 } else { hits as f64 / p.len() as f64 },
        recall: if t.is_empty() { 1.0 } else { hits as f64 / t.len() as f64 },
        no_predictions: p.is_empty(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub label: String,
    pub queries: Vec<Score>,
    /// Pooled over all queries.
    pub micro_precision: f64,
    pub micro_recall: f64,
    /// Averaged over queries.
    pub macro_precision: f64,
    pub macro_recall: f64,
}

pub fn summarize(label: &str, queries: Vec<Score>) -> EvalTable {
    let predicted: usize = queries.iter().map(|s| s.predicted).sum();
    let truth: usize = queries.iter().map(|s| s.truth).sum();
    let hits: usize = queries.iter().map(|s| s.hits).sum();
    let n = queries.len().max(1) as f64;
    EvalTable {
        label: label.to_string(),
        micro_precision: if predicted == 0 { 1.0 } else { hits as f64 / predicted as f64 },
        micro_recall: if truth == 0 { 1.0 } else { hits as f64 / truth as f64 },
        macro_precision: queries.iter().map(|s| s.precision).sum::<f64>() / n,
        macro_recall: queries.iter().map(|s| s.recall).sum::<f64>() / n,
        queries,
    }
}

impl EvalTable {
    pub fn render(&self) -> String {
        let mut out = format!("{}\n{:<24} {:>9} {:>9} {:>6} {:>6} {:>6}\n", self.label, "query", "precision", "recall", "pred", "truth", "hits");
        for s in &self.queries {
            let flag = if s.no_predictions { " (no predictions)" } else { "" };
            out.push_str(&format!(
                "{:<24} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}{}\n",
                s.query, s.precision, s.recall, s.predicted, s.truth, s.hits, flag
            ));
        }
        out.push_str(&format!(
            "{:<24} {:>9.4} {:>9.4}\n{:<24} {:>9.4} {:>9.4}\n",
            "micro", self.micro_precision, self.micro_recall, "macro", self.macro_precision, self.macro_recall
        ));
        out
    }
}
