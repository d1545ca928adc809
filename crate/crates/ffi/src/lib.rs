//! C ABI over the featmatch library.
//!
//! All objects are opaque handles created and freed by this library. Every
//! fallible function returns an [`FmStatus`]; on failure [`fm_last_error`]
//! describes what went wrong on the calling thread. Strings are UTF-8 and
//! NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::num::NonZeroUsize;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use featmatch::embeddings::{Embedder, ProviderConfig};
use featmatch::error::{EXIT_CONFIG, EXIT_IO, EXIT_PROVIDER};
use featmatch::ingest::{load_schema, ColumnMap, ComposePolicy, FeatureRecord, SchemaSource};
use featmatch::matcher::{match_all, top_k_per_left, MatchReport, WeightConfig, DEFAULT_THRESHOLD};
use featmatch::report::{write_report, ReportFormat};
use featmatch::textnorm::{normalize_records, NormConfig};

/// Result of every fallible call. The first three error codes match the
/// command-line tool's exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    Config = 1,
    Io = 2,
    Provider = 3,
    NullPointer = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmCompose {
    NameOnly = 0,
    NamePlusDescription = 1,
    NamePlusValues = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmFormat {
    Csv = 0,
    Json = 1,
}

/// Features of one dataset.
pub struct FmFeatureList {
    label: String,
    records: Vec<FeatureRecord>,
}

/// Scoring settings plus an embedder whose cache lives as long as the handle.
pub struct FmMatcher {
    embedder: Embedder,
    weights: WeightConfig,
    threshold: f64,
    compose: ComposePolicy,
    top_k: Option<NonZeroUsize>,
    norm: NormConfig,
}

struct RowStrings {
    left: CString,
    right: CString,
    left_id: Option<CString>,
    right_id: Option<CString>,
}

pub struct FmReport {
    report: MatchReport,
    strings: Vec<RowStrings>,
}

/// One report row. Strings are borrowed from the report and stay valid until
/// it is freed; absent ids are NULL.
#[repr(C)]
pub struct FmRow {
    pub left_feature: *const c_char,
    pub right_feature: *const c_char,
    pub left_id: *const c_char,
    pub right_id: *const c_char,
    pub jaccard: f64,
    pub cosine: f64,
    pub weighted_score: f64,
    pub degenerate: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn c_string(s: &str) -> CString {
    CString::new(s.replace('\0', "")).expect("NULs removed")
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = c_string(msg));
}

type Failure = (FmStatus, String);

fn fail<T>(status: FmStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn from_error(e: featmatch::Error) -> Failure {
    let status = match e.exit_code() {
        EXIT_CONFIG => FmStatus::Config,
        EXIT_IO => FmStatus::Io,
        EXIT_PROVIDER => FmStatus::Provider,
        _ => FmStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            FmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(FmStatus::NullPointer, format!("{what} is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FmStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or((FmStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or((FmStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T) -> Result<&'a mut *mut T, Failure> {
    p.as_mut()
        .ok_or((FmStatus::NullPointer, "output pointer is NULL".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn fm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New empty feature list. Returns NULL if `label` is NULL or not UTF-8.
///
/// # Safety
/// `label` must be NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fm_features_new(label: *const c_char) -> *mut FmFeatureList {
    let mut out = ptr::null_mut();
    guard(|| {
        let label = str_arg(label, "label")?;
        out = Box::into_raw(Box::new(FmFeatureList {
            label: label.to_string(),
            records: Vec::new(),
        }));
        Ok(())
    });
    out
}

/// Append a feature. `description` may be NULL. Blank names are rejected.
///
/// # Safety
/// `list` must come from this library; strings must be NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fm_features_push(
    list: *mut FmFeatureList,
    name: *const c_char,
    description: *const c_char,
) -> FmStatus {
    guard(|| {
        let list = handle_mut(list, "list")?;
        let name = str_arg(name, "name")?.trim();
        if name.is_empty() {
            return fail(FmStatus::InvalidArgument, "feature name is blank");
        }
        let mut rec = FeatureRecord::new(list.label.as_str(), name);
        if let Some(d) = opt_str_arg(description, "description")?
            .map(str::trim)
            .filter(|d| !d.is_empty())
        {
            rec = rec.with_description(d);
        }
        list.records.push(rec);
        Ok(())
    })
}

/// Load features from a CSV or JSON schema file with the default columns
/// (`name`, `description`, `id`, `values`).
///
/// # Safety
/// `path` and `label` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_features_load(
    path: *const c_char,
    label: *const c_char,
    out: *mut *mut FmFeatureList,
) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let label = str_arg(label, "label")?;
        let records =
            load_schema(&SchemaSource::Path(path), label, &ColumnMap::default()).map_err(|e| from_error(e.into()))?;
        *out = Box::into_raw(Box::new(FmFeatureList {
            label: label.to_string(),
            records,
        }));
        Ok(())
    })
}

/// Number of features; 0 for NULL.
///
/// # Safety
/// `list` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_features_len(list: *const FmFeatureList) -> usize {
    list.as_ref().map_or(0, |l| l.records.len())
}

/// # Safety
/// `list` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_features_free(list: *mut FmFeatureList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

fn new_matcher(config: &ProviderConfig) -> Result<FmMatcher, Failure> {
    let embedder = Embedder::from_config(config).map_err(|e| from_error(e.into()))?;
    Ok(FmMatcher {
        embedder,
        weights: WeightConfig::default(),
        threshold: DEFAULT_THRESHOLD,
        compose: ComposePolicy::default(),
        top_k: None,
        norm: NormConfig::default(),
    })
}

/// Matcher using the built-in hashing embedder.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_new_baseline(dim: usize, seed: u64, out: *mut *mut FmMatcher) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = Box::into_raw(Box::new(new_matcher(&ProviderConfig::baseline(dim, seed))?));
        Ok(())
    })
}

/// Matcher backed by an HTTP embedding service. `batch_size` 0 means the default.
///
/// # Safety
/// `endpoint` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_new_remote(
    endpoint: *const c_char,
    timeout_secs: f64,
    batch_size: usize,
    out: *mut *mut FmMatcher,
) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let mut cfg = ProviderConfig::remote(str_arg(endpoint, "endpoint")?);
        cfg.timeout_secs = timeout_secs;
        if batch_size > 0 {
            cfg.batch_size = batch_size;
        }
        *out = Box::into_raw(Box::new(new_matcher(&cfg)?));
        Ok(())
    })
}

/// Set the cosine weight; the Jaccard weight becomes `1 - w_cosine`.
///
/// # Safety
/// `matcher` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_set_weights(matcher: *mut FmMatcher, w_cosine: f64) -> FmStatus {
    guard(|| {
        let m = handle_mut(matcher, "matcher")?;
        m.weights = WeightConfig::from_cosine(w_cosine).map_err(|e| (FmStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `matcher` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_set_threshold(matcher: *mut FmMatcher, threshold: f64) -> FmStatus {
    guard(|| {
        let m = handle_mut(matcher, "matcher")?;
        if !(0.0..=1.0).contains(&threshold) {
            return fail(
                FmStatus::InvalidArgument,
                format!("threshold {threshold} is outside [0, 1]"),
            );
        }
        m.threshold = threshold;
        Ok(())
    })
}

/// # Safety
/// `matcher` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_set_compose(matcher: *mut FmMatcher, compose: FmCompose) -> FmStatus {
    guard(|| {
        handle_mut(matcher, "matcher")?.compose = match compose {
            FmCompose::NameOnly => ComposePolicy::NameOnly,
            FmCompose::NamePlusDescription => ComposePolicy::NamePlusDescription,
            FmCompose::NamePlusValues => ComposePolicy::NamePlusValues,
        };
        Ok(())
    })
}

/// Keep at most `k` rows per left feature; 0 keeps all.
///
/// # Safety
/// `matcher` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_set_top_k(matcher: *mut FmMatcher, k: usize) -> FmStatus {
    guard(|| {
        handle_mut(matcher, "matcher")?.top_k = NonZeroUsize::new(k);
        Ok(())
    })
}

/// # Safety
/// `matcher` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_matcher_free(matcher: *mut FmMatcher) {
    if !matcher.is_null() {
        drop(Box::from_raw(matcher));
    }
}

/// Score every left/right pair and return the ranked report.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_match(
    matcher: *const FmMatcher,
    left: *const FmFeatureList,
    right: *const FmFeatureList,
    out: *mut *mut FmReport,
) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let m = handle(matcher, "matcher")?;
        let left = normalize_records(&handle(left, "left")?.records, m.compose, &m.norm);
        let right = normalize_records(&handle(right, "right")?.records, m.compose, &m.norm);
        let mut report =
            match_all(&left, &right, m.weights, m.threshold, &m.embedder).map_err(|e| from_error(e.into()))?;
        if let Some(k) = m.top_k {
            report = top_k_per_left(report, k);
        }
        let strings = report
            .rows
            .iter()
            .map(|r| RowStrings {
                left: c_string(&r.left.name),
                right: c_string(&r.right.name),
                left_id: r.left.id.as_deref().map(c_string),
                right_id: r.right.id.as_deref().map(c_string),
            })
            .collect();
        *out = Box::into_raw(Box::new(FmReport { report, strings }));
        Ok(())
    })
}

/// Number of rows; 0 for NULL.
///
/// # Safety
/// `report` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_report_len(report: *const FmReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.rows.len())
}

/// Number of pairs scored before the threshold was applied.
///
/// # Safety
/// `report` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_report_pairs_scored(report: *const FmReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.pairs_scored)
}

/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_report_row(report: *const FmReport, index: usize, out: *mut FmRow) -> FmStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let out = out
            .as_mut()
            .ok_or((FmStatus::NullPointer, "output pointer is NULL".to_string()))?;
        let (Some(row), Some(s)) = (r.report.rows.get(index), r.strings.get(index)) else {
            return fail(
                FmStatus::InvalidArgument,
                format!("row {index} out of range ({} rows)", r.report.rows.len()),
            );
        };
        let opt = |c: &Option<CString>| c.as_ref().map_or(ptr::null(), |c| c.as_ptr());
        *out = FmRow {
            left_feature: s.left.as_ptr(),
            right_feature: s.right.as_ptr(),
            left_id: opt(&s.left_id),
            right_id: opt(&s.right_id),
            jaccard: row.jaccard,
            cosine: row.cosine,
            weighted_score: row.weighted,
            degenerate: row.degenerate,
        };
        Ok(())
    })
}

/// Write the report atomically as CSV or JSON.
///
/// # Safety
/// `report` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fm_report_write(report: *const FmReport, path: *const c_char, format: FmFormat) -> FmStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let format = match format {
            FmFormat::Csv => ReportFormat::Csv,
            FmFormat::Json => ReportFormat::Json,
        };
        write_report(&r.report, format, &path).map_err(|e| from_error(e.into()))
    })
}

/// # Safety
/// `report` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fm_report_free(report: *mut FmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
