//! Loading and cleaning the two feature lists.
//!
//! A schema file is either delimited text with a header row or a JSON array
//! of objects. Only the name column is required; `description`, `id` and
//! `values` (pipe-separated inside a cell) are picked up when present.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of distinct sample values appended by [`ComposePolicy::NamePlusValues`].
pub const MAX_COMPOSED_VALUES: usize = 32;

/// Separator placed between a feature name and its extra context.
pub const COMPOSE_SEPARATOR: &str = ". ";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {source_name}: {reason}")]
    UnreadableSource { source_name: String, reason: String },
    #[error("name column '{column}' not found in {source_name}")]
    MissingNameColumn { column: String, source_name: String },
    #[error("duplicate feature id '{id}' in dataset '{dataset}'")]
    DuplicateFeatureId { id: String, dataset: String },
}

/// One feature (column) of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub dataset_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_id: Option<String>,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_values: Vec<String>,
}

impl FeatureRecord {
    pub fn new(dataset_label: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            dataset_label: dataset_label.into(),
            feature_id: None,
            name: name.into(),
            description: None,
            sample_values: Vec::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.feature_id = Some(id.into());
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }

    pub fn with_values<I, S>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.sample_values = values.into_iter().map(Into::into).collect();
        self
    }
}

/// Which source columns feed which record fields. Optional columns that are
/// absent from a source are skipped silently.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub name: String,
    pub description: Option<String>,
    pub id: Option<String>,
    pub values: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            name: "name".to_string(),
            description: Some("description".to_string()),
            id: Some("id".to_string()),
            values: Some("values".to_string()),
        }
    }
}

/// A header plus rows, for callers that already hold the table in memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InMemoryTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub enum SchemaSource {
    Path(PathBuf),
    Table(InMemoryTable),
}

impl SchemaSource {
    fn display_name(&self) -> String {
        match self {
            SchemaSource::Path(p) => p.display().to_string(),
            SchemaSource::Table(_) => "<in-memory table>".to_string(),
        }
    }
}

impl From<&Path> for SchemaSource {
    fn from(p: &Path) -> Self {
        SchemaSource::Path(p.to_path_buf())
    }
}

impl From<PathBuf> for SchemaSource {
    fn from(p: PathBuf) -> Self {
        SchemaSource::Path(p)
    }
}

impl From<InMemoryTable> for SchemaSource {
    fn from(t: InMemoryTable) -> Self {
        SchemaSource::Table(t)
    }
}

#[derive(Debug, Default)]
struct RawRow {
    name: Option<String>,
    description: Option<String>,
    id: Option<String>,
    values: Vec<String>,
}

impl RawRow {
    fn into_record(self, dataset_label: &str) -> FeatureRecord {
        FeatureRecord {
            dataset_label: dataset_label.to_string(),
            feature_id: self.id,
            name: self.name.unwrap_or_default(),
            description: self.description,
            sample_values: self.values,
        }
    }
}

/// Load one feature list. Rows with an empty name are dropped, input order
/// is kept, and feature ids must be unique within the list.
pub fn load_schema(
    source: &SchemaSource,
    dataset_label: &str,
    column_map: &ColumnMap,
) -> Result<Vec<FeatureRecord>, IngestError> {
    let source_name = source.display_name();
    let rows = match source {
        SchemaSource::Path(path) => {
            let text = fs::read_to_string(path).map_err(|e| IngestError::UnreadableSource {
                source_name: source_name.clone(),
                reason: e.to_string(),
            })?;
            let is_json = path
                .extension()
                .map(|e| e.eq_ignore_ascii_case("json"))
                .unwrap_or(false)
                || text.trim_start().starts_with('[');
            if is_json {
                rows_from_json(&text, column_map, &source_name)?
            } else {
                rows_from_csv(&text, column_map, &source_name)?
            }
        }
        SchemaSource::Table(table) => rows_from_table(table, column_map, &source_name)?,
    };

    let records = clean_records(rows.into_iter().map(|r| r.into_record(dataset_label)).collect());

    let mut seen = HashSet::new();
    for rec in &records {
        if let Some(id) = &rec.feature_id {
            if !seen.insert(id.as_str()) {
                return Err(IngestError::DuplicateFeatureId {
                    id: id.clone(),
                    dataset: dataset_label.to_string(),
                });
            }
        }
    }
    Ok(records)
}

fn find_column(headers: &[String], wanted: &str) -> Option<usize> {
    headers.iter().position(|h| h == wanted).or_else(|| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(wanted.trim()))
    })
}

fn split_values(cell: &str) -> Vec<String> {
    cell.split('|').map(str::to_string).collect()
}

struct ColumnIndex {
    name: usize,
    description: Option<usize>,
    id: Option<usize>,
    values: Option<usize>,
}

impl ColumnIndex {
    fn resolve(headers: &[String], map: &ColumnMap, source_name: &str) -> Result<Self, IngestError> {
        let name = find_column(headers, &map.name).ok_or_else(|| IngestError::MissingNameColumn {
            column: map.name.clone(),
            source_name: source_name.to_string(),
        })?;
        let opt = |c: &Option<String>| c.as_deref().and_then(|c| find_column(headers, c));
        Ok(Self {
            name,
            description: opt(&map.description),
            id: opt(&map.id),
            values: opt(&map.values),
        })
    }

    fn row<'a>(&self, cell: impl Fn(usize) -> Option<&'a str>) -> RawRow {
        let get = |idx: Option<usize>| idx.and_then(&cell).map(str::to_string);
        RawRow {
            name: get(Some(self.name)),
            description: get(self.description),
            id: get(self.id),
            values: self.values.and_then(&cell).map(split_values).unwrap_or_default(),
        }
    }
}

fn rows_from_csv(text: &str, map: &ColumnMap, source_name: &str) -> Result<Vec<RawRow>, IngestError> {
    let unreadable = |e: csv::Error| IngestError::UnreadableSource {
        source_name: source_name.to_string(),
        reason: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(unreadable)?
        .iter()
        .map(str::to_string)
        .collect();
    let index = ColumnIndex::resolve(&headers, map, source_name)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(unreadable)?;
        rows.push(index.row(|i| record.get(i)));
    }
    Ok(rows)
}

fn rows_from_table(table: &InMemoryTable, map: &ColumnMap, source_name: &str) -> Result<Vec<RawRow>, IngestError> {
    let index = ColumnIndex::resolve(&table.headers, map, source_name)?;
    Ok(table
        .rows
        .iter()
        .map(|row| index.row(|i| row.get(i).map(String::as_str)))
        .collect())
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        other => Some(other.to_string()),
    }
}

fn rows_from_json(text: &str, map: &ColumnMap, source_name: &str) -> Result<Vec<RawRow>, IngestError> {
    let unreadable = |reason: String| IngestError::UnreadableSource {
        source_name: source_name.to_string(),
        reason,
    };
    let items: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(text).map_err(|e| unreadable(format!("expected a JSON array of objects: {e}")))?;

    if !items.is_empty() && !items.iter().any(|o| o.contains_key(&map.name)) {
        return Err(IngestError::MissingNameColumn {
            column: map.name.clone(),
            source_name: source_name.to_string(),
        });
    }

    let field = |obj: &serde_json::Map<String, serde_json::Value>, key: &Option<String>| {
        key.as_deref().and_then(|k| obj.get(k)).and_then(json_scalar)
    };
    Ok(items
        .iter()
        .map(|obj| {
            let values = match map.values.as_deref().and_then(|k| obj.get(k)) {
                Some(serde_json::Value::Array(items)) => items.iter().filter_map(json_scalar).collect(),
                Some(v) => json_scalar(v).map(|s| split_values(&s)).unwrap_or_default(),
                None => Vec::new(),
            };
            RawRow {
                name: obj.get(&map.name).and_then(json_scalar),
                description: field(obj, &map.description),
                id: field(obj, &map.id),
                values,
            }
        })
        .collect())
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Drop records whose name is blank; trim names, descriptions, ids and
/// sample values, turning blank optional fields into `None`.
pub fn clean_records(records: Vec<FeatureRecord>) -> Vec<FeatureRecord> {
    records
        .into_iter()
        .filter_map(|rec| {
            let name = rec.name.trim();
            if name.is_empty() {
                return None;
            }
            Some(FeatureRecord {
                dataset_label: rec.dataset_label,
                feature_id: non_blank(rec.feature_id),
                name: name.to_string(),
                description: non_blank(rec.description),
                sample_values: rec
                    .sample_values
                    .into_iter()
                    .filter_map(|v| non_blank(Some(v)))
                    .collect(),
            })
        })
        .collect()
}

/// How a feature's matching text is assembled from its record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposePolicy {
    #[default]
    NameOnly,
    NamePlusDescription,
    NamePlusValues,
}

impl FromStr for ComposePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "name_only" => Ok(Self::NameOnly),
            "name_plus_description" => Ok(Self::NamePlusDescription),
            "name_plus_values" => Ok(Self::NamePlusValues),
            other => Err(format!(
                "unknown composition policy '{other}' (expected name_only, name_plus_description or name_plus_values)"
            )),
        }
    }
}

impl fmt::Display for ComposePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NameOnly => "name_only",
            Self::NamePlusDescription => "name_plus_description",
            Self::NamePlusValues => "name_plus_values",
        })
    }
}

/// The text a feature is matched on. Always starts with the record's name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedText {
    pub record: Arc<FeatureRecord>,
    pub text: String,
}

pub fn compose_text(record: &Arc<FeatureRecord>, policy: ComposePolicy) -> ComposedText {
    let name = record.name.as_str();
    let text = match policy {
        ComposePolicy::NameOnly => name.to_string(),
        ComposePolicy::NamePlusDescription => match &record.description {
            Some(d) if !d.is_empty() => format!("{name}{COMPOSE_SEPARATOR}{d}"),
            _ => name.to_string(),
        },
        ComposePolicy::NamePlusValues => {
            let mut seen = HashSet::new();
            let unique: Vec<&str> = record
                .sample_values
                .iter()
                .map(String::as_str)
                .filter(|v| seen.insert(*v))
                .take(MAX_COMPOSED_VALUES)
                .collect();
            if unique.is_empty() {
                name.to_string()
            } else {
                format!("{name}{COMPOSE_SEPARATOR}{}", unique.join(", "))
            }
        }
    };
    ComposedText {
        record: Arc::clone(record),
        text,
    }
}
