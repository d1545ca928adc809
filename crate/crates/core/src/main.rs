use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featmatch::embeddings::ProviderKind;
use featmatch::error::{EXIT_CONFIG, EXIT_IO};
use featmatch::ingest::{load_schema, ColumnMap, ComposePolicy, SchemaSource};
use featmatch::matcher::WeightOption;
use featmatch::report::{
    evaluate_rows, read_gold, read_report_rows, run, KnownFeatures, ReportError, ReportFormat, RunConfig,
};
use featmatch::Error;

#[derive(Parser)]
#[command(name = "featmatch", version, about = "Match features between two dataset schemas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Score every left/right feature pair and write the ranked report.
    Match(MatchArgs),
    /// Score a report against a gold mapping and print precision/recall as JSON.
    Evaluate(EvalArgs),
}

#[derive(Args)]
struct MatchArgs {
    /// TOML run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    left: Option<PathBuf>,
    #[arg(long)]
    right: Option<PathBuf>,
    #[arg(long)]
    left_name_col: Option<String>,
    #[arg(long)]
    right_name_col: Option<String>,
    #[arg(long)]
    left_desc_col: Option<String>,
    #[arg(long)]
    right_desc_col: Option<String>,
    /// name_only, name_plus_description or name_plus_values
    #[arg(long)]
    compose: Option<ComposePolicy>,
    /// option1, option2, option3, or the cosine weight as a number
    #[arg(long)]
    weights: Option<WeightOption>,
    #[arg(long)]
    threshold: Option<f64>,
    /// baseline or remote
    #[arg(long)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    endpoint: Option<String>,
    /// Baseline embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Baseline hash seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Remote request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// JSON embedding cache, loaded before and saved after the run.
    #[arg(long)]
    cache_file: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Embed the composed text instead of the normalized tokens.
    #[arg(long)]
    embed_raw: bool,
    /// Newline-delimited stopword list replacing the default.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Left input, used to flag gold pairs naming unknown features.
    #[arg(long, requires = "right")]
    left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    right: Option<PathBuf>,
}

impl MatchArgs {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(self.left.map(Some) => left.path);
        set!(self.right.map(Some) => right.path);
        set!(self.left_name_col => left.columns.name);
        set!(self.right_name_col => right.columns.name);
        set!(self.left_desc_col.map(Some) => left.columns.description);
        set!(self.right_desc_col.map(Some) => right.columns.description);
        set!(self.compose => compose);
        set!(self.weights => weights);
        set!(self.threshold => threshold);
        set!(self.provider => provider.kind);
        set!(self.endpoint.map(Some) => provider.endpoint);
        set!(self.dim => provider.dim);
        set!(self.seed => provider.seed);
        set!(self.batch_size => provider.batch_size);
        set!(self.timeout => provider.timeout_secs);
        set!(self.cache_file.map(Some) => provider.cache_file);
        set!(self.top_k.map(Some) => top_k);
        set!(self.output.map(Some) => output.path);
        set!(self.format.map(Some) => output.format);
        set!(self.stopwords.map(Some) => stopwords_file);
        if self.embed_raw {
            cfg.normalize.embed_raw = true;
        }
        Ok(cfg)
    }
}

fn run_match(args: MatchArgs) -> Result<(), Error> {
    let cfg = args.into_config()?;
    let outcome = run(&cfg)?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    if outcome.written_to.is_none() {
        std::io::stdout()
            .write_all(outcome.rendered.as_bytes())
            .map_err(|e| ReportError::UnwritablePath {
                path: PathBuf::from("<stdout>"),
                reason: e.to_string(),
            })?;
    }
    Ok(())
}

fn feature_names(path: PathBuf, label: &str) -> Result<HashSet<String>, Error> {
    let records = load_schema(&SchemaSource::Path(path), label, &ColumnMap::default())?;
    Ok(records.into_iter().map(|r| r.name).collect())
}

fn run_evaluate(args: EvalArgs) -> Result<(), Error> {
    let rows = read_report_rows(&args.report)?;
    let gold = read_gold(&args.gold)?;
    let known = match (args.left, args.right) {
        (Some(l), Some(r)) => Some(KnownFeatures {
            left: feature_names(l, "left")?,
            right: feature_names(r, "right")?,
        }),
        _ => None,
    };
    let result = evaluate_rows(&rows, &gold, known.as_ref());
    for g in &result.unknown_gold {
        eprintln!(
            "warning: gold pair ({}, {}) names a feature absent from the inputs; skipped",
            g.left, g.right
        );
    }
    println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Match(args) => run_match(args),
        Command::Evaluate(args) => run_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(EXIT_IO as u8))
        }
    }
}
