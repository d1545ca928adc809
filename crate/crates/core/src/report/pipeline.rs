use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{ConfigError, RunConfig};
use super::output::{render, write_atomic};
use crate::embeddings::Embedder;
use crate::ingest::{load_schema, FeatureRecord, SchemaSource};
use crate::matcher::{attach_ids, match_all, top_k_per_left, MatchReport};
use crate::textnorm::{load_stopwords, normalize_records};
use crate::Error;

#[derive(Debug)]
pub struct RunOutcome {
    pub report: MatchReport,
    /// The serialized report, exactly as written.
    pub rendered: String,
    pub written_to: Option<PathBuf>,
}

/// `SOURCE_DATE_EPOCH` when set, for reproducible JSON output; otherwise now.
fn generation_time() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

fn id_map(records: &[FeatureRecord]) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for r in records {
        if let Some(id) = &r.feature_id {
            map.entry(r.name.clone()).or_insert_with(|| id.clone());
        }
    }
    map
}

/// Load, normalize, embed, match and serialize. The output file is only
/// replaced once the whole report has been rendered.
pub fn run(config: &RunConfig) -> Result<RunOutcome, Error> {
    config.validate()?;

    let mut norm = config.normalize.clone();
    if let Some(path) = &config.stopwords_file {
        norm.stopwords = load_stopwords(path).map_err(|e| ConfigError::Read {
            path: path.clone(),
            reason: e.to_string(),
        })?;
    }

    let load = |side: &super::config::SourceConfig, fallback: &str| {
        let path = side.path.clone().expect("validated");
        load_schema(&SchemaSource::Path(path), &side.label(fallback), &side.columns)
    };
    let left_records = load(&config.left, "left")?;
    let right_records = load(&config.right, "right")?;

    let left = normalize_records(&left_records, config.compose, &norm);
    let right = normalize_records(&right_records, config.compose, &norm);

    let embedder = Embedder::from_config(&config.provider)?;
    let weights = config.weights.weights()?;
    let mut report = match_all(&left, &right, weights, config.threshold, &embedder)?;
    report = attach_ids(report, &id_map(&left_records), &id_map(&right_records));
    if let Some(k) = config.top_k.and_then(NonZeroUsize::new) {
        report = top_k_per_left(report, k);
    }
    report.run_metadata.config_hash = config.config_hash();
    report.run_metadata.generated_at_unix = Some(generation_time());

    if let Some(cache) = &config.provider.cache_file {
        embedder.save_cache(cache)?;
    }

    let rendered = render(&report, config.output.resolved_format());
    if let Some(path) = &config.output.path {
        write_atomic(path, rendered.as_bytes())?;
    }
    Ok(RunOutcome {
        report,
        rendered,
        written_to: config.output.path.clone(),
    })
}
