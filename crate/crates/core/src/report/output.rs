use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ReportFormat;
use crate::matcher::{MatchReport, PairScore};

pub const CSV_HEADER: [&str; 8] = [
    "left_feature",
    "right_feature",
    "left_id",
    "right_id",
    "jaccard",
    "cosine",
    "weighted_score",
    "degenerate",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {reason}")]
    UnwritablePath { path: PathBuf, reason: String },
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("malformed report: {0}")]
    Malformed(String),
}

/// One report line as it appears in CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub left_feature: String,
    pub right_feature: String,
    pub left_id: Option<String>,
    pub right_id: Option<String>,
    pub jaccard: f64,
    pub cosine: f64,
    pub weighted_score: f64,
    pub degenerate: bool,
}

impl From<&PairScore> for ReportRow {
    fn from(p: &PairScore) -> Self {
        Self {
            left_feature: p.left.name.clone(),
            right_feature: p.right.name.clone(),
            left_id: p.left.id.clone(),
            right_id: p.right.id.clone(),
            jaccard: p.jaccard,
            cosine: p.cosine,
            weighted_score: p.weighted,
            degenerate: p.degenerate,
        }
    }
}

fn score(v: f64) -> String {
    format!("{v:.8}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn render_csv_rows<'a>(rows: impl IntoIterator<Item = &'a ReportRow>) -> String {
    let mut w = csv_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.left_feature.as_str(),
            r.right_feature.as_str(),
            r.left_id.as_deref().unwrap_or(""),
            r.right_id.as_deref().unwrap_or(""),
            &score(r.jaccard),
            &score(r.cosine),
            &score(r.weighted_score),
            if r.degenerate { "true" } else { "false" },
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Header plus one line per row, scores at 8 decimals.
pub fn render_csv(report: &MatchReport) -> String {
    let rows: Vec<ReportRow> = report.rows.iter().map(ReportRow::from).collect();
    render_csv_rows(&rows)
}

pub fn render_json(report: &MatchReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(report: &MatchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => render_json(report),
    }
}

/// Write atomically: a temp file in the target directory renamed into place.
pub fn write_report(report: &MatchReport, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    write_atomic(path, render(report, format).as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let fail = |e: &dyn std::fmt::Display| ReportError::UnwritablePath {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn parse_opt(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

/// Parse CSV produced by [`render_csv`]. The header must match exactly.
pub fn parse_csv_report(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| ReportError::Malformed(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(ReportError::Malformed(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ReportError::Malformed(e.to_string()))?;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| ReportError::Malformed(format!("row {}: {}: {e}", line + 1, CSV_HEADER[i])))
        };
        rows.push(ReportRow {
            left_feature: rec[0].to_string(),
            right_feature: rec[1].to_string(),
            left_id: parse_opt(&rec[2]),
            right_id: parse_opt(&rec[3]),
            jaccard: num(4)?,
            cosine: num(5)?,
            weighted_score: num(6)?,
            degenerate: match &rec[7] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(ReportError::Malformed(format!(
                        "row {}: degenerate '{other}'",
                        line + 1
                    )))
                }
            },
        });
    }
    Ok(rows)
}

/// Read report rows from a CSV or JSON report file.
pub fn read_report_rows(path: &Path) -> Result<Vec<ReportRow>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReportError::Unreadable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if ReportFormat::for_path(path) == ReportFormat::Json || text.trim_start().starts_with('{') {
        let report: MatchReport = serde_json::from_str(&text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        Ok(report.rows.iter().map(ReportRow::from).collect())
    } else {
        parse_csv_report(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{FeatureRef, RunMetadata, WeightConfig};
    use proptest::prelude::*;

    fn pair(left: &str, right: &str, j: f64, c: f64, w: f64) -> PairScore {
        PairScore {
            left: FeatureRef {
                name: left.into(),
                id: None,
            },
            right: FeatureRef {
                name: right.into(),
                id: None,
            },
            jaccard: j,
            cosine: c,
            raw_cosine: c,
            weighted: w,
            weights: WeightConfig::default(),
            degenerate: false,
        }
    }

    fn report(rows: Vec<PairScore>) -> MatchReport {
        MatchReport {
            rows,
            threshold: 0.7,
            weights: WeightConfig::default(),
            provider_id: "baseline-fnv1a/dim=256/seed=0".into(),
            run_metadata: RunMetadata {
                generated_at_unix: Some(1_700_000_000),
                config_hash: "abc".into(),
            },
            pairs_scored: 4,
            warnings: vec![],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            render_csv(&report(vec![])),
            "left_feature,right_feature,left_id,right_id,jaccard,cosine,weighted_score,degenerate\n"
        );
    }

    #[test]
    fn perfect_row_line() {
        let csv = render_csv(&report(vec![pair("PRICE", "price", 1.0, 1.0, 1.0)]));
        assert_eq!(
            csv.lines().nth(1),
            Some("PRICE,price,,,1.00000000,1.00000000,1.00000000,false")
        );
    }

    #[test]
    fn quoting_and_ids() {
        let mut p = pair("Listed in, genre", "desc \"long\"", 0.5, 0.25, 0.3);
        p.left.id = Some("f1".into());
        let csv = render_csv(&report(vec![p]));
        assert_eq!(
            csv.lines().nth(1),
            Some("\"Listed in, genre\",\"desc \"\"long\"\"\",f1,,0.50000000,0.25000000,0.30000000,false")
        );
        let rows = parse_csv_report(&csv).unwrap();
        assert_eq!(rows[0].left_feature, "Listed in, genre");
        assert_eq!(rows[0].left_id.as_deref(), Some("f1"));
        assert_eq!(rows[0].right_id, None);
    }

    #[test]
    fn json_round_trip() {
        let r = report(vec![
            pair("a", "b", 0.1, 0.123456789012345, 0.3),
            pair("c", "d", 1.0, 1.0, 1.0),
        ]);
        let back: MatchReport = serde_json::from_str(&render_json(&r)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(parse_csv_report("a,b\n1,2\n").is_err());
        let bad =
            "left_feature,right_feature,left_id,right_id,jaccard,cosine,weighted_score,degenerate\na,b,,,x,1,1,false\n";
        assert!(matches!(parse_csv_report(bad), Err(ReportError::Malformed(_))));
    }

    #[test]
    fn atomic_write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(vec![pair("PRICE", "price", 1.0, 1.0, 1.0)]);
        for (name, fmt) in [("r.csv", ReportFormat::Csv), ("r.json", ReportFormat::Json)] {
            let path = dir.path().join(name);
            write_report(&r, fmt, &path).unwrap();
            let rows = read_report_rows(&path).unwrap();
            assert_eq!(rows, vec![ReportRow::from(&r.rows[0])]);
        }
        // Only the two reports remain; no temp files left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn unwritable_path() {
        let r = report(vec![]);
        let err = write_report(&r, ReportFormat::Csv, Path::new("/nonexistent-dir/x/out.csv")).unwrap_err();
        assert!(matches!(err, ReportError::UnwritablePath { .. }));
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in proptest::collection::vec(
                ("[A-Za-z ,\"_]{1,12}", "[A-Za-z ,_]{1,12}", 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, any::<bool>()),
                0..10,
            )
        ) {
            let pairs: Vec<PairScore> = rows
                .into_iter()
                .map(|(l, r, j, c, w, d)| PairScore { degenerate: d, ..pair(&l, &r, j, c, w) })
                .collect();
            let csv = render_csv(&report(pairs.clone()));
            let parsed = parse_csv_report(&csv).unwrap();
            prop_assert_eq!(parsed.len(), pairs.len());
            for (row, p) in parsed.iter().zip(&pairs) {
                prop_assert_eq!(&row.left_feature, &p.left.name);
                prop_assert!((row.weighted_score - p.weighted).abs() <= 5e-9);
                prop_assert_eq!(row.degenerate, p.degenerate);
            }
            prop_assert_eq!(render_csv_rows(&parsed), csv);
        }
    }
}
