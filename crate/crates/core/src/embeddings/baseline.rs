//! Deterministic feature-hashing embedder.
//!
//! Every whitespace token and every character trigram of `^token$` is hashed
//! with seeded FNV-1a 64. The hash picks a bucket (`hash % dim`) and a sign
//! (bit 63). Tokens add 1.0, trigrams add 0.5, and the result is L2-normalized.

use super::{EmbedError, EmbeddingProvider};

pub const MIN_DIM: usize = 8;
pub const DEFAULT_DIM: usize = 256;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

const TOKEN_WEIGHT: f64 = 1.0;
const TRIGRAM_WEIGHT: f64 = 0.5;

fn fnv1a_update(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// FNV-1a 64 over the little-endian seed bytes followed by `bytes`.
pub fn seeded_fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    fnv1a_update(fnv1a_update(FNV_OFFSET, &seed.to_le_bytes()), bytes)
}

fn accumulate(values: &mut [f64], hash: u64, weight: f64) {
    let idx = (hash % values.len() as u64) as usize;
    let sign = if hash >> 63 == 1 { -1.0 } else { 1.0 };
    values[idx] += sign * weight;
}

/// Character trigrams of `^token$`, in order.
pub fn boundary_trigrams(token: &str) -> Vec<String> {
    let padded: Vec<char> = std::iter::once('^')
        .chain(token.chars())
        .chain(std::iter::once('$'))
        .collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

/// # Panics
/// If `dim < 8`.
pub fn baseline_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(
        dim >= MIN_DIM,
        "baseline dimension must be at least {MIN_DIM}, got {dim}"
    );
    let mut values = vec![0.0; dim];
    let base = fnv1a_update(FNV_OFFSET, &seed.to_le_bytes());
    for token in text.split_whitespace() {
        accumulate(&mut values, fnv1a_update(base, token.as_bytes()), TOKEN_WEIGHT);
        for gram in boundary_trigrams(token) {
            accumulate(&mut values, fnv1a_update(base, gram.as_bytes()), TRIGRAM_WEIGHT);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut values {
            *v /= norm;
        }
    }
    values
}

#[derive(Debug, Clone)]
pub struct BaselineProvider {
    id: String,
    dim: usize,
    seed: u64,
}

impl BaselineProvider {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < MIN_DIM {
            return Err(EmbedError::InvalidConfig(format!(
                "baseline dim must be >= {MIN_DIM}, got {dim}"
            )));
        }
        Ok(Self {
            id: format!("baseline-fnv1a/dim={dim}/seed={seed}"),
            dim,
            seed,
        })
    }
}

impl EmbeddingProvider for BaselineProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| baseline_embed(t, self.dim, self.seed)).collect())
    }
}
