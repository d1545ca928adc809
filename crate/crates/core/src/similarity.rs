//! Pairwise scorers: token-set Jaccard and embedding cosine.
//!
//! Both return a [`SimilarityScore`] in `[0, 1]`. Empty token sets and zero
//! vectors score 0 with `degenerate = true` so reports can tell "no evidence"
//! apart from "evidence of dissimilarity".

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingVector;
use crate::textnorm::{NormalizedFeature, TokenSet};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("cannot compare vectors from {left_provider} (dim {left_dim}) and {right_provider} (dim {right_dim})")]
    DimensionMismatch {
        left_provider: String,
        left_dim: usize,
        right_provider: String,
        right_dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Jaccard,
    Cosine,
    Other(String),
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreKind::Jaccard => f.write_str("jaccard"),
            ScoreKind::Cosine => f.write_str("cosine"),
            ScoreKind::Other(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    /// In `[0, 1]`; zero whenever `degenerate` is set.
    pub value: f64,
    pub kind: ScoreKind,
    pub degenerate: bool,
    /// Value before clamping. Only differs from `value` for negative cosines.
    pub raw: f64,
}

impl SimilarityScore {
    fn degenerate(kind: ScoreKind) -> Self {
        Self {
            value: 0.0,
            kind,
            degenerate: true,
            raw: 0.0,
        }
    }
}

/// `|a ∩ b| / |a ∪ b|` over deduplicated token sets.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> SimilarityScore {
    if a.is_empty() && b.is_empty() {
        return SimilarityScore::degenerate(ScoreKind::Jaccard);
    }
    // Both iterators are sorted; merge-walk for the intersection size.
    let (mut xs, mut ys) = (a.iter(), b.iter());
    let (mut x, mut y) = (xs.next(), ys.next());
    let mut shared = 0usize;
    while let (Some(l), Some(r)) = (x, y) {
        match l.cmp(r) {
            std::cmp::Ordering::Less => x = xs.next(),
            std::cmp::Ordering::Greater => y = ys.next(),
            std::cmp::Ordering::Equal => {
                shared += 1;
                x = xs.next();
                y = ys.next();
            }
        }
    }
    let union = a.len() + b.len() - shared;
    let value = shared as f64 / union as f64;
    SimilarityScore {
        value,
        kind: ScoreKind::Jaccard,
        degenerate: false,
        raw: value,
    }
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[0, 1]`.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<SimilarityScore, SimilarityError> {
    if u.dim() != v.dim() || u.provider_id != v.provider_id {
        return Err(SimilarityError::DimensionMismatch {
            left_provider: u.provider_id.to_string(),
            left_dim: u.dim(),
            right_provider: v.provider_id.to_string(),
            right_dim: v.dim(),
        });
    }
    Ok(cosine_values(&u.values, &v.values))
}

/// Cosine over raw slices of equal length.
pub fn cosine_values(u: &[f64], v: &[f64]) -> SimilarityScore {
    debug_assert_eq!(u.len(), v.len());
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return SimilarityScore::degenerate(ScoreKind::Cosine);
    }
    // sqrt(n * n) == n exactly, so u == v gives exactly 1.
    let raw = dot / (nu * nv).sqrt();
    SimilarityScore {
        value: raw.clamp(0.0, 1.0),
        kind: ScoreKind::Cosine,
        degenerate: false,
        raw,
    }
}

/// A pluggable measure over two normalized features.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, left: &NormalizedFeature, right: &NormalizedFeature) -> SimilarityScore;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl Scorer for JaccardScorer {
    fn name(&self) -> &str {
        "jaccard"
    }

    fn score(&self, left: &NormalizedFeature, right: &NormalizedFeature) -> SimilarityScore {
        jaccard(&left.token_set, &right.token_set)
    }
}

/// Named feature-level scorers. Comes with `jaccard` registered.
#[derive(Clone)]
pub struct ScorerRegistry {
    scorers: BTreeMap<String, Arc<dyn Scorer>>,
}

impl Default for ScorerRegistry {
    fn default() -> Self {
        let mut r = Self {
            scorers: BTreeMap::new(),
        };
        r.register(Arc::new(JaccardScorer));
        r
    }
}

impl ScorerRegistry {
    /// Registers under `scorer.name()`, replacing any previous entry.
    pub fn register(&mut self, scorer: Arc<dyn Scorer>) -> Option<Arc<dyn Scorer>> {
        self.scorers.insert(scorer.name().to_string(), scorer)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Scorer>> {
        self.scorers.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.scorers.keys().map(String::as_str)
    }
}
