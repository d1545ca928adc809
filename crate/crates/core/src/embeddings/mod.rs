//! Embedding providers and the caching front-end used by the matcher.

mod baseline;
mod remote;

pub use baseline::{baseline_embed, boundary_trigrams, seeded_fnv1a, BaselineProvider, DEFAULT_DIM, MIN_DIM};
pub use remote::{EmbedRequest, EmbedResponse, RemoteProvider};

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_TIMEOUT_SECS: f64 = 30.0;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("remote provider {endpoint} unavailable: {reason}")]
    RemoteUnavailable { endpoint: String, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding cache {path}: {reason}")]
    CacheFile { path: PathBuf, reason: String },
}

/// A vector produced by one provider. Values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub provider_id: Arc<str>,
    pub values: Arc<[f64]>,
}

impl EmbeddingVector {
    pub fn new(provider_id: impl Into<Arc<str>>, values: impl Into<Arc<[f64]>>) -> Self {
        Self {
            provider_id: provider_id.into(),
            values: values.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// A backend that turns non-empty texts into vectors, one round-trip per call.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identity; vectors from different identities never mix.
    fn id(&self) -> &str;
    /// Dimension, if known before the first call.
    fn dim(&self) -> Option<usize>;
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Baseline,
    Remote,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Self::Baseline),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown provider '{other}' (expected baseline or remote)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Baseline only.
    pub dim: usize,
    /// Baseline only.
    pub seed: u64,
    /// Remote only.
    pub endpoint: Option<String>,
    pub batch_size: usize,
    pub timeout_secs: f64,
    /// Optional JSON file the cache is loaded from and saved to.
    pub cache_file: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Baseline,
            dim: DEFAULT_DIM,
            seed: 0,
            endpoint: None,
            batch_size: DEFAULT_BATCH_SIZE,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            cache_file: None,
        }
    }
}

impl ProviderConfig {
    pub fn baseline(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            ..Self::default()
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            kind: ProviderKind::Remote,
            endpoint: Some(endpoint.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        let invalid = |m: String| Err(EmbedError::InvalidConfig(m));
        if self.batch_size == 0 {
            return invalid("batch_size must be >= 1".into());
        }
        match self.kind {
            ProviderKind::Baseline if self.dim < MIN_DIM => {
                invalid(format!("baseline dim must be >= {MIN_DIM}, got {}", self.dim))
            }
            ProviderKind::Remote if self.endpoint.as_deref().is_none_or(str::is_empty) => {
                invalid("remote provider requires an endpoint".into())
            }
            ProviderKind::Remote if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) => {
                invalid(format!("timeout must be positive, got {}", self.timeout_secs))
            }
            _ => Ok(()),
        }
    }

    pub fn build_provider(&self) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
        self.validate()?;
        Ok(match self.kind {
            ProviderKind::Baseline => Box::new(BaselineProvider::new(self.dim, self.seed)?),
            ProviderKind::Remote => Box::new(RemoteProvider::new(
                self.endpoint.as_deref().unwrap_or_default(),
                Duration::from_secs_f64(self.timeout_secs),
            )?),
        })
    }
}

#[derive(Default)]
struct EmbeddingCache {
    entries: RwLock<HashMap<String, Arc<[f64]>>>,
}

impl EmbeddingCache {
    fn get(&self, text: &str) -> Option<Arc<[f64]>> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(text)
            .cloned()
    }

    fn insert(&self, text: String, values: Arc<[f64]>) {
        self.entries
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(text, values);
    }

    fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }
}

/// On-disk cache layout: provider id -> text -> vector.
#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    providers: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

fn read_cache_file(path: &Path) -> Result<CacheFile, EmbedError> {
    match std::fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| EmbedError::CacheFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(CacheFile::default()),
        Err(e) => Err(EmbedError::CacheFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }),
    }
}

/// Provider plus an in-memory cache keyed by exact text.
///
/// Empty texts never reach the provider; they map to the zero vector.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    batch_size: usize,
    cache: Option<EmbeddingCache>,
    learned_dim: OnceLock<usize>,
    backend_calls: AtomicUsize,
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>, batch_size: usize) -> Self {
        Self {
            provider,
            batch_size: batch_size.max(1),
            cache: Some(EmbeddingCache::default()),
            learned_dim: OnceLock::new(),
            backend_calls: AtomicUsize::new(0),
        }
    }

    pub fn from_config(config: &ProviderConfig) -> Result<Self, EmbedError> {
        let embedder = Self::new(config.build_provider()?, config.batch_size);
        if let Some(path) = &config.cache_file {
            embedder.load_cache(path)?;
        }
        Ok(embedder)
    }

    /// Disable memoization; every text goes to the provider on every call.
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn dim(&self) -> Option<usize> {
        self.provider.dim().or_else(|| self.learned_dim.get().copied())
    }

    /// Number of provider round-trips made so far.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.as_ref().map_or(0, EmbeddingCache::len)
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    /// Embed many texts. The result is element-wise equal to calling
    /// [`Embedder::embed`] on each text; with the cache on, every distinct
    /// text reaches the provider at most once.
    pub fn embed_batch<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut resolved: Vec<Option<Arc<[f64]>>> = vec![None; texts.len()];
        let mut pending: Vec<String> = Vec::new();
        let mut pending_slots: Vec<Vec<usize>> = Vec::new();
        let mut pending_index: HashMap<&str, usize> = HashMap::new();
        let mut empties = Vec::new();

        for (i, text) in texts.iter().enumerate() {
            let text = text.as_ref();
            if text.is_empty() {
                empties.push(i);
                continue;
            }
            match &self.cache {
                Some(cache) => {
                    if let Some(v) = cache.get(text) {
                        resolved[i] = Some(v);
                    } else if let Some(&slot) = pending_index.get(text) {
                        pending_slots[slot].push(i);
                    } else {
                        pending_index.insert(text, pending.len());
                        pending.push(text.to_string());
                        pending_slots.push(vec![i]);
                    }
                }
                None => {
                    pending.push(text.to_string());
                    pending_slots.push(vec![i]);
                }
            }
        }

        for (chunk_no, chunk) in pending.chunks(self.batch_size).enumerate() {
            let vectors = self.call_provider(chunk)?;
            for (offset, (text, values)) in chunk.iter().zip(vectors).enumerate() {
                let values: Arc<[f64]> = values.into();
                for &i in &pending_slots[chunk_no * self.batch_size + offset] {
                    resolved[i] = Some(Arc::clone(&values));
                }
                if let Some(cache) = &self.cache {
                    cache.insert(text.clone(), values);
                }
            }
        }

        if !empties.is_empty() {
            let dim = match self.dim() {
                Some(d) => d,
                None => {
                    // Nothing has told us the dimension yet; ask once.
                    self.call_provider(&[String::new()])?;
                    self.dim().expect("dimension learned from probe")
                }
            };
            let zero: Arc<[f64]> = vec![0.0; dim].into();
            for i in empties {
                resolved[i] = Some(Arc::clone(&zero));
            }
        }

        let provider_id: Arc<str> = self.provider.id().into();
        Ok(resolved
            .into_iter()
            .map(|v| EmbeddingVector {
                provider_id: Arc::clone(&provider_id),
                values: v.expect("every slot resolved"),
            })
            .collect())
    }

    fn call_provider(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        let vectors = self.provider.embed_texts(texts)?;
        if vectors.len() != texts.len() {
            return Err(EmbedError::InvalidConfig(format!(
                "provider {} returned {} vectors for {} texts",
                self.provider.id(),
                vectors.len(),
                texts.len()
            )));
        }
        for v in &vectors {
            let expected = match self.dim() {
                Some(d) => d,
                None => *self.learned_dim.get_or_init(|| v.len()),
            };
            if v.len() != expected {
                return Err(EmbedError::DimensionMismatch { expected, got: v.len() });
            }
        }
        Ok(vectors)
    }

    /// Merge entries for this provider from a cache file, if it exists.
    pub fn load_cache(&self, path: &Path) -> Result<(), EmbedError> {
        let Some(cache) = &self.cache else { return Ok(()) };
        let mut file = read_cache_file(path)?;
        if let Some(entries) = file.providers.remove(self.provider.id()) {
            for (text, values) in entries {
                let expected = self.dim().unwrap_or(values.len());
                if values.len() != expected || values.is_empty() {
                    return Err(EmbedError::CacheFile {
                        path: path.to_path_buf(),
                        reason: format!("entry for '{text}' has dimension {}, expected {expected}", values.len()),
                    });
                }
                if self.provider.dim().is_none() {
                    self.learned_dim.get_or_init(|| values.len());
                }
                cache.insert(text, values.into());
            }
        }
        Ok(())
    }

    /// Write this provider's entries to `path`, keeping other providers' entries.
    pub fn save_cache(&self, path: &Path) -> Result<(), EmbedError> {
        let Some(cache) = &self.cache else { return Ok(()) };
        let mut file = read_cache_file(path)?;
        let entries: BTreeMap<String, Vec<f64>> = cache
            .entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .map(|(k, v)| (k.clone(), v.to_vec()))
            .collect();
        file.providers.insert(self.provider.id().to_string(), entries);
        let io_err = |reason: String| EmbedError::CacheFile {
            path: path.to_path_buf(),
            reason,
        };
        let json = serde_json::to_string(&file).map_err(|e| io_err(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| io_err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    type Batches = Arc<Mutex<Vec<Vec<String>>>>;

    /// Records every batch it receives; vectors encode length and first byte.
    struct Recording {
        batches: Batches,
        dim: Option<usize>,
    }

    impl EmbeddingProvider for Recording {
        fn id(&self) -> &str {
            "recording"
        }
        fn dim(&self) -> Option<usize> {
            self.dim
        }
        fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
            self.batches.lock().unwrap().push(texts.to_vec());
            Ok(texts
                .iter()
                .map(|t| vec![t.len() as f64 + 1.0, t.bytes().next().unwrap_or(0) as f64, 0.5])
                .collect())
        }
    }

    fn recording(dim: Option<usize>) -> (Embedder, Batches) {
        let batches = Batches::default();
        let provider = Recording {
            batches: Arc::clone(&batches),
            dim,
        };
        (Embedder::new(Box::new(provider), 2), batches)
    }

    fn baseline() -> Embedder {
        Embedder::from_config(&ProviderConfig::default()).unwrap()
    }

    #[test]
    fn embed_is_deterministic() {
        let e = baseline();
        assert_eq!(e.embed("price").unwrap(), e.embed("price").unwrap());
        assert_eq!(e.embed("price").unwrap(), baseline().embed("price").unwrap());
    }

    #[test]
    fn empty_text_gives_zero_vector() {
        let e = baseline();
        let v = e.embed("").unwrap();
        assert_eq!(v.dim(), DEFAULT_DIM);
        assert!(v.is_zero());
        assert_eq!(e.backend_calls(), 0);
    }

    #[test]
    fn seed_changes_vectors() {
        let a = Embedder::from_config(&ProviderConfig::baseline(256, 0)).unwrap();
        let b = Embedder::from_config(&ProviderConfig::baseline(256, 1)).unwrap();
        assert_ne!(a.embed("director").unwrap().values, b.embed("director").unwrap().values);
        assert_ne!(a.provider_id(), b.provider_id());
    }

    #[test]
    fn batch_dedups_and_keeps_positions() {
        let (e, rec) = recording(Some(3));
        let out = e.embed_batch(&["a", "a", "b"]).unwrap();
        assert_eq!(out[0], out[1]);
        assert_ne!(out[0], out[2]);
        assert_eq!(*rec.lock().unwrap(), vec![vec!["a".to_string(), "b".to_string()]]);

        // Second call is served from cache.
        e.embed_batch(&["b", "a"]).unwrap();
        assert_eq!(e.backend_calls(), 1);
        assert!(e.embed_batch::<&str>(&[]).unwrap().is_empty());
    }

    #[test]
    fn batch_size_splits_requests() {
        let (e, rec) = recording(Some(3));
        e.embed_batch(&["a", "bb", "ccc", "dddd", "eeeee"]).unwrap();
        let sizes: Vec<usize> = rec.lock().unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, [2, 2, 1]);
    }

    #[test]
    fn unknown_dim_probes_for_empty_only_input() {
        let (e, rec) = recording(None);
        let out = e.embed_batch(&["", ""]).unwrap();
        assert_eq!(out[0].dim(), 3);
        assert!(out[1].is_zero());
        assert_eq!(rec.lock().unwrap().len(), 1);
        // Dimension now known; no further probe.
        e.embed("").unwrap();
        assert_eq!(e.backend_calls(), 1);
    }

    #[test]
    fn cache_is_transparent() {
        let texts = ["released year", "release year", "", "director", "released year"];
        let cached = baseline().embed_batch(&texts).unwrap();
        let uncached = baseline().without_cache().embed_batch(&texts).unwrap();
        assert_eq!(cached, uncached);
    }

    #[test]
    fn cache_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let cfg = ProviderConfig {
            cache_file: Some(path.clone()),
            ..ProviderConfig::default()
        };
        let first = Embedder::from_config(&cfg).unwrap();
        let v = first.embed("price").unwrap();
        first.save_cache(&path).unwrap();

        let second = Embedder::from_config(&cfg).unwrap();
        assert_eq!(second.cached_len(), 1);
        assert_eq!(second.embed("price").unwrap(), v);
        assert_eq!(second.backend_calls(), 0);

        // Entries for a different provider identity are not picked up.
        let other = Embedder::from_config(&ProviderConfig { seed: 9, ..cfg.clone() }).unwrap();
        assert_eq!(other.cached_len(), 0);
    }

    #[test]
    fn config_validation() {
        assert!(ProviderConfig::baseline(4, 0).validate().is_err());
        assert!(ProviderConfig {
            kind: ProviderKind::Remote,
            ..ProviderConfig::default()
        }
        .validate()
        .is_err());
        assert!(ProviderConfig::remote("http://127.0.0.1:9/embed").validate().is_ok());
        assert!(matches!(
            ProviderConfig::remote("not a url").build_provider(),
            Err(EmbedError::InvalidConfig(_))
        ));
        assert!(ProviderConfig {
            batch_size: 0,
            ..ProviderConfig::default()
        }
        .validate()
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn vectors_are_unit_or_zero(text in "\\PC{0,30}", seed in any::<u64>(), dim in 8usize..300) {
                let v = baseline_embed(&text, dim, seed);
                prop_assert!(v.iter().all(|x| x.is_finite()));
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
                prop_assert_eq!(&baseline_embed(&text, dim, seed), &v);
            }
        }
    }
}
