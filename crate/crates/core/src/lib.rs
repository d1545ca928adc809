//! Feature (schema) matching between two datasets.
//!
//! Each feature name, optionally extended with its description or sample
//! values, is normalized into a lemmatized token set and an embedding text.
//! Every left/right pair is then scored with token-set Jaccard and embedding
//! cosine, the two are fused with a convex weighting, and pairs at or above a
//! threshold are reported in descending order.
//!
//! ```
//! use featmatch::embeddings::{Embedder, ProviderConfig};
//! use featmatch::ingest::{ComposePolicy, FeatureRecord};
//! use featmatch::matcher::{match_all, WeightOption};
//! use featmatch::textnorm::{normalize_records, NormConfig};
//!
//! let left = vec![FeatureRecord::new("imdb", "Director")];
//! let right = vec![FeatureRecord::new("netflix", "director"), FeatureRecord::new("netflix", "cast")];
//! let cfg = NormConfig::default();
//! let left = normalize_records(&left, ComposePolicy::NameOnly, &cfg);
//! let right = normalize_records(&right, ComposePolicy::NameOnly, &cfg);
//! let embedder = Embedder::from_config(&ProviderConfig::default()).unwrap();
//! let weights = WeightOption::Option1.weights().unwrap();
//! let report = match_all(&left, &right, weights, 0.7, &embedder).unwrap();
//! assert_eq!(report.rows[0].right.name, "director");
//! assert!((report.rows[0].weighted - 1.0).abs() < 1e-12);
//! ```

pub mod embeddings;
pub mod error;
pub mod ingest;
pub mod matcher;
pub mod report;
pub mod similarity;
pub mod textnorm;

pub use error::{Error, Result};
