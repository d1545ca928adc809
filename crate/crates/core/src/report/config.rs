use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embeddings::{ProviderConfig, ProviderKind};
use crate::ingest::{ColumnMap, ComposePolicy};
use crate::matcher::{WeightOption, DEFAULT_THRESHOLD};
use crate::textnorm::NormConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("cannot parse config {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{what} not found: {path}")]
    MissingFile { what: &'static str, path: PathBuf },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` means JSON; anything else is CSV.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub path: Option<PathBuf>,
    /// Dataset label; defaults to the file stem.
    pub label: Option<String>,
    pub columns: ColumnMap,
}

impl SourceConfig {
    pub fn label(&self, fallback: &str) -> String {
        self.label.clone().unwrap_or_else(|| {
            self.path
                .as_deref()
                .and_then(Path::file_stem)
                .and_then(|s| s.to_str())
                .unwrap_or(fallback)
                .to_string()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Written to stdout when absent.
    pub path: Option<PathBuf>,
    /// Inferred from the path extension when absent.
    pub format: Option<ReportFormat>,
}

impl OutputConfig {
    pub fn resolved_format(&self) -> ReportFormat {
        self.format
            .or_else(|| self.path.as_deref().map(ReportFormat::for_path))
            .unwrap_or(ReportFormat::Csv)
    }
}

/// Everything a `match` run needs. Loadable from TOML; CLI flags override
/// individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub left: SourceConfig,
    pub right: SourceConfig,
    pub compose: ComposePolicy,
    pub normalize: NormConfig,
    /// Newline-delimited list replacing `normalize.stopwords`.
    pub stopwords_file: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub weights: WeightOption,
    pub threshold: f64,
    pub top_k: Option<usize>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            left: SourceConfig::default(),
            right: SourceConfig::default(),
            compose: ComposePolicy::default(),
            normalize: NormConfig::default(),
            stopwords_file: None,
            provider: ProviderConfig::default(),
            weights: WeightOption::default(),
            threshold: DEFAULT_THRESHOLD,
            top_k: None,
            output: OutputConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parse a TOML config. Relative paths inside it are resolved against
    /// the directory containing the file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|reason| ConfigError::Parse {
            path: path.to_path_buf(),
            reason,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.left.path);
        rebase(base, &mut cfg.right.path);
        rebase(base, &mut cfg.stopwords_file);
        rebase(base, &mut cfg.output.path);
        rebase(base, &mut cfg.provider.cache_file);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Checks ranges and that every referenced input file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError::Invalid(format!(
                "threshold {} is outside [0, 1]",
                self.threshold
            )));
        }
        self.weights
            .weights()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.top_k == Some(0) {
            return Err(ConfigError::Invalid("top_k must be >= 1".into()));
        }
        self.provider
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (what, source) in [("left source", &self.left), ("right source", &self.right)] {
            match &source.path {
                None => return Err(ConfigError::Invalid(format!("{what} not set"))),
                Some(p) if !p.is_file() => return Err(ConfigError::MissingFile { what, path: p.clone() }),
                Some(_) => {}
            }
        }
        if let Some(p) = &self.stopwords_file {
            if !p.is_file() {
                return Err(ConfigError::MissingFile {
                    what: "stopword file",
                    path: p.clone(),
                });
            }
        }
        if self.provider.kind == ProviderKind::Remote && self.provider.endpoint.is_none() {
            return Err(ConfigError::Invalid("remote provider requires --endpoint".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of this config.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }
}
