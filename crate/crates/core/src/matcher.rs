//! Cross-product scoring, weighted fusion, thresholding and ranking.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embeddings::{EmbedError, Embedder, EmbeddingVector};
use crate::similarity::{cosine, jaccard, SimilarityError};
use crate::textnorm::NormalizedFeature;

pub const DEFAULT_THRESHOLD: f64 = 0.7;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("invalid weight {0}: cosine weight must lie in [0, 1]")]
    InvalidWeight(f64),
    #[error("invalid threshold {0}: must lie in [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Convex weights: `w_cosine + w_jaccard = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub w_cosine: f64,
    pub w_jaccard: f64,
}

impl WeightConfig {
    pub fn from_cosine(w_cosine: f64) -> Result<Self, MatchError> {
        if !(0.0..=1.0).contains(&w_cosine) {
            return Err(MatchError::InvalidWeight(w_cosine));
        }
        Ok(Self {
            w_cosine,
            w_jaccard: 1.0 - w_cosine,
        })
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        let in_range = |w: f64| (0.0..=1.0).contains(&w);
        if !in_range(self.w_cosine) {
            return Err(MatchError::InvalidWeight(self.w_cosine));
        }
        if !in_range(self.w_jaccard) || (self.w_cosine + self.w_jaccard - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(MatchError::InvalidWeight(self.w_cosine));
        }
        Ok(())
    }
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightOption::Option1.weights().expect("preset weights are valid")
    }
}

/// The three preset weightings, or an explicit cosine weight.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum WeightOption {
    /// cosine 0.7, jaccard 0.3
    #[default]
    Option1,
    /// cosine 0.5, jaccard 0.5
    Option2,
    /// cosine 0.3, jaccard 0.7
    Option3,
    Explicit(f64),
}

impl WeightOption {
    pub fn weights(self) -> Result<WeightConfig, MatchError> {
        weight_option(self)
    }
}

pub fn weight_option(option: WeightOption) -> Result<WeightConfig, MatchError> {
    let preset = |w_cosine, w_jaccard| Ok(WeightConfig { w_cosine, w_jaccard });
    match option {
        WeightOption::Option1 => preset(0.7, 0.3),
        WeightOption::Option2 => preset(0.5, 0.5),
        WeightOption::Option3 => preset(0.3, 0.7),
        WeightOption::Explicit(w) => WeightConfig::from_cosine(w),
    }
}

impl FromStr for WeightOption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "option1" => Ok(Self::Option1),
            "option2" => Ok(Self::Option2),
            "option3" => Ok(Self::Option3),
            other => other.parse::<f64>().map(Self::Explicit).map_err(|_| {
                format!("invalid weights '{other}' (expected option1, option2, option3 or a cosine weight in [0, 1])")
            }),
        }
    }
}

impl fmt::Display for WeightOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Option1 => f.write_str("option1"),
            Self::Option2 => f.write_str("option2"),
            Self::Option3 => f.write_str("option3"),
            Self::Explicit(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WeightRepr {
    Named(String),
    Explicit(f64),
}

impl Serialize for WeightOption {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Explicit(w) => WeightRepr::Explicit(*w),
            other => WeightRepr::Named(other.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightOption {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match WeightRepr::deserialize(d)? {
            WeightRepr::Explicit(w) => Ok(Self::Explicit(w)),
            WeightRepr::Named(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `w_cosine * cosine + w_jaccard * jaccard`.
///
/// The result is kept inside `[min(jaccard, cosine), max(jaccard, cosine)]`,
/// which rounding alone would not guarantee.
pub fn fuse(jaccard: f64, cosine: f64, weights: WeightConfig) -> f64 {
    let raw = weights.w_cosine * cosine + weights.w_jaccard * jaccard;
    raw.clamp(jaccard.min(cosine), jaccard.max(cosine))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl FeatureRef {
    fn of(feature: &NormalizedFeature) -> Self {
        Self {
            name: feature.name().to_string(),
            id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub left: FeatureRef,
    pub right: FeatureRef,
    pub jaccard: f64,
    pub cosine: f64,
    /// Cosine before clamping negatives to zero.
    pub raw_cosine: f64,
    pub weighted: f64,
    pub weights: WeightConfig,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
struct Components {
    jaccard: f64,
    cosine: f64,
    raw_cosine: f64,
    weighted: f64,
    degenerate: bool,
}

fn components(
    left: &NormalizedFeature,
    right: &NormalizedFeature,
    left_vec: &EmbeddingVector,
    right_vec: &EmbeddingVector,
    weights: WeightConfig,
) -> Result<Components, SimilarityError> {
    let j = jaccard(&left.token_set, &right.token_set);
    let c = cosine(left_vec, right_vec)?;
    Ok(Components {
        jaccard: j.value,
        cosine: c.value,
        raw_cosine: c.raw,
        weighted: fuse(j.value, c.value, weights),
        degenerate: j.degenerate || c.degenerate,
    })
}

impl Components {
    fn into_pair(self, left: &NormalizedFeature, right: &NormalizedFeature, weights: WeightConfig) -> PairScore {
        PairScore {
            left: FeatureRef::of(left),
            right: FeatureRef::of(right),
            jaccard: self.jaccard,
            cosine: self.cosine,
            raw_cosine: self.raw_cosine,
            weighted: self.weighted,
            weights,
            degenerate: self.degenerate,
        }
    }
}

pub fn score_pair(
    left: &NormalizedFeature,
    right: &NormalizedFeature,
    left_vec: &EmbeddingVector,
    right_vec: &EmbeddingVector,
    weights: WeightConfig,
) -> Result<PairScore, MatchError> {
    Ok(components(left, right, left_vec, right_vec, weights)?.into_pair(left, right, weights))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// Seconds since the Unix epoch; absent unless the caller stamps it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub rows: Vec<PairScore>,
    pub threshold: f64,
    pub weights: WeightConfig,
    pub provider_id: String,
    pub run_metadata: RunMetadata,
    /// Pairs scored before thresholding.
    pub pairs_scored: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Weighted descending, then left name, then right name.
pub fn row_order(a: &PairScore, b: &PairScore) -> Ordering {
    b.weighted
        .total_cmp(&a.weighted)
        .then_with(|| a.left.name.cmp(&b.left.name))
        .then_with(|| a.right.name.cmp(&b.right.name))
}

fn check_threshold(threshold: f64) -> Result<(), MatchError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(MatchError::InvalidThreshold(threshold))
    }
}

fn scoring_hash(threshold: f64, weights: WeightConfig, provider_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "threshold={threshold:?};w_cosine={:?};w_jaccard={:?};provider={provider_id}",
        weights.w_cosine, weights.w_jaccard
    ));
    format!("{:x}", h.finalize())
}

/// Score every left/right pair and keep those with `weighted >= threshold`.
///
/// Each distinct embedding text is embedded once. Scoring runs in parallel,
/// but rows are gathered in pair-index order before the (stable) sort, so the
/// output does not depend on scheduling.
pub fn match_all(
    left: &[NormalizedFeature],
    right: &[NormalizedFeature],
    weights: WeightConfig,
    threshold: f64,
    embedder: &Embedder,
) -> Result<MatchReport, MatchError> {
    check_threshold(threshold)?;
    weights.validate()?;
    let provider_id = embedder.provider_id().to_string();
    let mut report = MatchReport {
        rows: Vec::new(),
        threshold,
        weights,
        run_metadata: RunMetadata {
            generated_at_unix: None,
            config_hash: scoring_hash(threshold, weights, &provider_id),
        },
        provider_id,
        pairs_scored: 0,
        warnings: Vec::new(),
    };
    if left.is_empty() || right.is_empty() {
        report.warnings.push(format!(
            "empty input: {} left and {} right features, nothing to match",
            left.len(),
            right.len()
        ));
        return Ok(report);
    }

    let texts: Vec<&str> = left.iter().chain(right).map(|f| f.embedding_text.as_str()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let (left_vecs, right_vecs) = vectors.split_at(left.len());

    let n = right.len();
    let counter = AtomicUsize::new(0);
    let kept: Vec<Option<PairScore>> = (0..left.len() * n)
        .into_par_iter()
        .with_min_len(256)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            counter.fetch_add(1, AtomicOrdering::Relaxed);
            let c = components(&left[i], &right[j], &left_vecs[i], &right_vecs[j], weights)?;
            Ok((c.weighted >= threshold).then(|| c.into_pair(&left[i], &right[j], weights)))
        })
        .collect::<Result<_, MatchError>>()?;

    report.pairs_scored = counter.into_inner();
    report.rows = kept.into_iter().flatten().collect();
    report.rows.sort_by(row_order);
    Ok(report)
}

/// Annotate rows with external ids. Names missing from a map leave that side untouched.
pub fn attach_ids(
    mut report: MatchReport,
    left_ids: &HashMap<String, String>,
    right_ids: &HashMap<String, String>,
) -> MatchReport {
    for row in &mut report.rows {
        if let Some(id) = left_ids.get(&row.left.name) {
            row.left.id = Some(id.clone());
        }
        if let Some(id) = right_ids.get(&row.right.name) {
            row.right.id = Some(id.clone());
        }
    }
    report
}

/// Keep each left feature's `k` best rows. Ties at the cut are resolved by
/// the report order, i.e. right name ascending.
pub fn top_k_per_left(mut report: MatchReport, k: NonZeroUsize) -> MatchReport {
    report.rows.sort_by(row_order);
    let mut taken: HashMap<(String, Option<String>), usize> = HashMap::new();
    report.rows.retain(|row| {
        let count = taken.entry((row.left.name.clone(), row.left.id.clone())).or_insert(0);
        *count += 1;
        *count <= k.get()
    });
    report
}
