//! Precision/recall of a report against a hand-curated gold mapping.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::{ReportError, ReportRow};
use crate::matcher::MatchReport;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldPair {
    pub left: String,
    pub right: String,
}

impl GoldPair {
    pub fn new(left: impl Into<String>, right: impl Into<String>) -> Self {
        Self {
            left: left.into(),
            right: right.into(),
        }
    }
}

/// Feature names present in the two inputs, used to vet gold pairs.
#[derive(Debug, Clone, Default)]
pub struct KnownFeatures {
    pub left: HashSet<String>,
    pub right: HashSet<String>,
}

impl KnownFeatures {
    fn knows(&self, pair: &GoldPair) -> bool {
        self.left.contains(&pair.left) && self.right.contains(&pair.right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Gold pairs naming a feature absent from the inputs; not scored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_gold: Vec<GoldPair>,
}

/// Score `(left, right)` predictions against gold. Both sides are treated as
/// sets, so the result does not depend on order or repeated rows.
pub fn evaluate_pairs<I>(predicted: I, gold: &[GoldPair], known: Option<&KnownFeatures>) -> EvalResult
where
    I: IntoIterator<Item = GoldPair>,
{
    let mut unknown = BTreeSet::new();
    let gold: HashSet<&GoldPair> = gold
        .iter()
        .filter(|g| match known {
            Some(k) if !k.knows(g) => {
                unknown.insert((*g).clone());
                false
            }
            _ => true,
        })
        .collect();
    let predicted: HashSet<GoldPair> = predicted.into_iter().collect();

    let tp = predicted.iter().filter(|p| gold.contains(p)).count();
    let fp = predicted.len() - tp;
    let fn_ = gold.len() - tp;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, predicted.len());
    let recall = ratio(tp, gold.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalResult {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        unknown_gold: unknown.into_iter().collect(),
    }
}

pub fn evaluate(report: &MatchReport, gold: &[GoldPair]) -> EvalResult {
    evaluate_pairs(
        report.rows.iter().map(|r| GoldPair::new(&r.left.name, &r.right.name)),
        gold,
        None,
    )
}

pub fn evaluate_rows(rows: &[ReportRow], gold: &[GoldPair], known: Option<&KnownFeatures>) -> EvalResult {
    evaluate_pairs(
        rows.iter().map(|r| GoldPair::new(&r.left_feature, &r.right_feature)),
        gold,
        known,
    )
}

/// Gold CSV: header row, then `left,right` pairs. Columns named
/// `left_feature`/`right_feature` (or `left`/`right`) are used when present,
/// otherwise the first two columns.
pub fn read_gold(path: &Path) -> Result<Vec<GoldPair>, ReportError> {
    let unreadable = |reason: String| ReportError::Unreadable {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| unreadable(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| unreadable(e.to_string()))?.clone();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let l = find(&["left_feature", "left"]).unwrap_or(0);
    let r = find(&["right_feature", "right"]).unwrap_or(1);

    let mut pairs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| unreadable(e.to_string()))?;
        match (rec.get(l), rec.get(r)) {
            (Some(a), Some(b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                pairs.push(GoldPair::new(a.trim(), b.trim()))
            }
            _ => {
                return Err(ReportError::Malformed(format!(
                    "gold file {}: row {} needs two non-empty names",
                    path.display(),
                    pairs.len() + 1
                )))
            }
        }
    }
    Ok(pairs)
}
