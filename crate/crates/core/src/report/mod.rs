//! Run configuration, the end-to-end pipeline, report serialization and the
//! evaluation harness behind the command-line tool.

mod config;
mod eval;
mod output;
mod pipeline;

pub use config::{ConfigError, OutputConfig, ReportFormat, RunConfig, SourceConfig};
pub use eval::{evaluate, evaluate_pairs, evaluate_rows, read_gold, EvalResult, GoldPair, KnownFeatures};
pub use output::{
    parse_csv_report, read_report_rows, render, render_csv, render_csv_rows, render_json, write_atomic, write_report,
    ReportError, ReportRow, CSV_HEADER,
};
pub use pipeline::{run, RunOutcome};
