//! Per-slot top-k accuracy of ranked condition lists against labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::condition::{ConditionConfig, Slot, SpeciesDictionary};
use crate::knowbase::RawRecord;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

const RULE: &str = "slot hit at k: any of the top-k configs equals the label in that slot after synonym canonicalization; an empty label matches an empty slot";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub label: ConditionConfig,
    /// Best first.
    pub predictions: Vec<ConditionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub ks: Vec<usize>,
    pub queries: usize,
    pub hits: BTreeMap<Slot, Vec<usize>>,
    /// Percentages, parallel to `ks`.
    pub accuracy: BTreeMap<Slot, Vec<f64>>,
    pub rule: String,
}

impl EvalResult {
    /// Tab-separated, two decimals, one row per slot and a closing count.
    pub fn table(&self) -> String {
        let mut out = String::from("slot");
        for k in &self.ks {
            write!(out, "\ttop{k}").expect("string write");
        }
        out.push('\n');
        for (slot, acc) in &self.accuracy {
            out.push_str(slot.name());
            for a in acc {
                write!(out, "\t{a:.2}").expect("string write");
            }
            out.push('\n');
        }
        writeln!(out, "queries\t{}", self.queries).expect("string write");
        out
    }
}

pub fn evaluate(cases: &[EvalCase], ks: &[usize], dict: &SpeciesDictionary) -> EvalResult {
    let mut hits: BTreeMap<Slot, Vec<usize>> = Slot::ALL.iter().map(|&s| (s, vec![0; ks.len()])).collect();
    for case in cases {
        let label = case.label.canonicalized(dict);
        let preds: Vec<ConditionConfig> = case.predictions.iter().map(|p| p.canonicalized(dict)).collect();
        for slot in Slot::ALL {
            let first = preds.iter().position(|p| p.get(slot) == label.get(slot));
            for (i, &k) in ks.iter().enumerate() {
                if first.is_some_and(|f| f < k) {
                    hits.get_mut(&slot).expect("slot")[i] += 1;
                }
            }
        }
    }
    let n = cases.len();
    let accuracy = hits
        .iter()
        .map(|(&s, h)| (s, h.iter().map(|&x| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 }).collect()))
        .collect();
    EvalResult { ks: ks.to_vec(), queries: n, hits, accuracy, rule: RULE.into() }
}

/// Labeled records in base format: one JSON object per non-blank line,
/// unique ids, both sides non-empty, at least one record.
pub fn read_test_set<R: BufRead>(source: R) -> Result<Vec<RawRecord>, PipelineError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in source.lines().enumerate() {
        let bad = |reason: String| PipelineError::MalformedTestSet { line: i + 1, reason };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if raw.reactants.is_empty() || raw.products.is_empty() {
            return Err(bad(format!("record {} lacks reactants or products", raw.id)));
        }
        if !ids.insert(raw.id.clone()) {
            return Err(bad(format!("duplicate id {}", raw.id)));
        }
        out.push(raw);
    }
    if out.is_empty() {
        return Err(PipelineError::MalformedTestSet { line: 0, reason: "no records".into() });
    }
    Ok(out)
}
