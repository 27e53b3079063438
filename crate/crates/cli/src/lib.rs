//! `contra` command line: score a study table or reclassify stored summaries.
//!
//! Exit codes: 0 on success, 2 for unreadable, malformed or invalid input,
//! 3 when `--strict-gate` is set and a study's control mean is not bounded
//! away from zero.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use contra_core::analysis::{analyze, AnalysisError, AnalysisOptions, GatePolicy, StudyResult};
use contra_core::contraplot::{render_contra_plot, ContraPlotSpec, MetadataColumn, PlotError};
use contra_core::effectsize::{EffectSizeError, EffectSizeSummary};
use contra_core::ingest::{load_study_table, IngestError};
use contra_core::report::{
    classify, order_by, parse_summaries, write_summaries, ReportError, SortMode, SummaryRecord,
};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_GATE: u8 = 3;

/// Largest accepted threshold (1000%).
pub const MAX_THRESHOLD: f64 = 10.0;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "contra",
    version,
    about = "Relative effect sizes and negligible-effect tests from summary statistics"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample each study's posterior and write Ls%/Ms% summaries.
    Analyze(AnalyzeArgs),
    /// Re-test stored summaries against new thresholds without sampling.
    Classify(ClassifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum SortArg {
    #[default]
    CenterOut,
    FileOrder,
}

impl From<SortArg> for SortMode {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::CenterOut => SortMode::CenterOut,
            SortArg::FileOrder => SortMode::FileOrder,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Negligible-effect threshold as a fraction (0.30 = 30%).
    #[arg(long, value_parser = parse_threshold)]
    pub threshold_negligible: Option<f64>,
    /// Meaningful-effect threshold as a fraction.
    #[arg(long, value_parser = parse_threshold)]
    pub threshold_meaningful: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Study table (CSV).
    #[arg(
        value_name = "INPUT",
        required_unless_present = "input",
        conflicts_with = "input"
    )]
    pub path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Posterior draws per study.
    #[arg(long, default_value_t = contra_core::posterior::DEFAULT_SAMPLES, value_parser = parse_samples)]
    pub samples: usize,
    #[arg(long, env = "CONTRA_SEED", default_value_t = contra_core::analysis::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Summary records as JSON; `-` for standard output.
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
    /// Contra plot as SVG.
    #[arg(long, value_name = "PATH")]
    pub out_plot: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub sort: SortArg,
    /// Exit 3 instead of warning when a control mean is not bounded away from zero.
    #[arg(long)]
    pub strict_gate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Summary records written by `contra analyze --out-json`.
    #[arg(
        value_name = "SUMMARIES",
        required_unless_present = "input",
        conflicts_with = "input"
    )]
    pub path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub sort: SortArg,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t <= MAX_THRESHOLD {
        Ok(t)
    } else {
        Err(format!("must be in (0, {MAX_THRESHOLD}]"))
    }
}

fn parse_samples(s: &str) -> Result<usize, String> {
    let k: usize = s.trim().parse().map_err(|e| format!("{e}"))?;
    if k >= MIN_SAMPLES {
        Ok(k)
    } else {
        Err(format!("must be at least {MIN_SAMPLES}"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
    #[error("{path}: {}", describe_analysis(.source))]
    Analysis {
        path: PathBuf,
        source: AnalysisError,
    },
    #[error("{path}: {source}")]
    Summaries { path: PathBuf, source: ReportError },
    #[error(transparent)]
    Threshold(#[from] EffectSizeError),
    #[error("plot: {0}")]
    Plot(#[from] PlotError),
}

fn describe_analysis(e: &AnalysisError) -> String {
    match e {
        AnalysisError::Invalid(rows) => {
            let mut s = e.to_string();
            for (id, report) in rows {
                let _ = write!(s, "\n  study {id}: {report}");
            }
            s
        }
        other => other.to_string(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Analysis {
                source: AnalysisError::Gate(_),
                ..
            } => EXIT_GATE,
            _ => EXIT_INPUT,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_to(path: &Path, contents: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    if path == Path::new("-") {
        out.write_all(contents.as_bytes()).map_err(io)
    } else {
        std::fs::write(path, contents).map_err(io)
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => run_analyze(&a, out),
        Command::Classify(c) => run_classify(&c, out),
    }
}

fn decided(e: &EffectSizeSummary, t: &ThresholdArgs) -> Result<SummaryRecord, CliError> {
    let r = SummaryRecord::from_summary(e);
    Ok(
        classify(&[r], t.threshold_negligible, t.threshold_meaningful)
            .map_err(|e| match e {
                ReportError::Threshold(e) => CliError::Threshold(e),
                other => unreachable!("classifying a fresh record: {other}"),
            })?
            .remove(0),
    )
}

pub fn run_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = a
        .input
        .as_ref()
        .or(a.path.as_ref())
        .expect("clap requires an input");
    let table = load_study_table(&read(path)?).map_err(|source| CliError::Ingest {
        path: path.clone(),
        source,
    })?;
    if table.studies.is_empty() {
        log::warn!("{}: no studies", path.display());
    }

    let opts = AnalysisOptions {
        k: a.samples,
        seed: a.seed,
        gate: if a.strict_gate {
            GatePolicy::Strict
        } else {
            GatePolicy::Flag
        },
    };
    log::info!(
        "analyzing {} studies, k = {}, seed = {}",
        table.studies.len(),
        opts.k,
        opts.seed
    );
    let results = analyze(&table.studies, &opts).map_err(|source| CliError::Analysis {
        path: path.clone(),
        source,
    })?;
    let results = order_by(results, a.sort.into(), |r| &r.summary);

    let records = results
        .iter()
        .map(|r| decided(&r.summary, &a.thresholds))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(plot) = &a.out_plot {
        if results.is_empty() {
            log::warn!("no studies; skipping plot");
        } else {
            let mut spec = ContraPlotSpec::new(
                results
                    .iter()
                    .map(|r| (r.study.clone(), r.summary.clone()))
                    .collect(),
            );
            spec.negligible_threshold = a.thresholds.threshold_negligible;
            spec.meaningful_threshold = a.thresholds.threshold_meaningful;
            write_to(plot, &render_contra_plot(&spec)?, out)?;
        }
    }
    if let Some(json) = &a.out_json {
        write_to(json, &write_summaries(&records), out)?;
    }
    if a.out_json.as_deref() != Some(Path::new("-"))
        && a.out_plot.as_deref() != Some(Path::new("-"))
    {
        write_table(out, &study_table(&results, &records), path)?;
    }
    Ok(())
}

pub fn run_classify(c: &ClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = c
        .input
        .as_ref()
        .or(c.path.as_ref())
        .expect("clap requires an input");
    let stored = parse_summaries(&read(path)?).map_err(|source| CliError::Summaries {
        path: path.clone(),
        source,
    })?;
    if stored.is_empty() {
        log::warn!("{}: no studies", path.display());
    }
    let records = classify(
        &stored,
        c.thresholds.threshold_negligible,
        c.thresholds.threshold_meaningful,
    )
    .map_err(|source| CliError::Summaries {
        path: path.clone(),
        source,
    })?;
    let records = order_by(
        records.into_iter().map(|r| (r.to_summary(), r)).collect(),
        c.sort.into(),
        |(e, _)| e,
    )
    .into_iter()
    .map(|(_, r)| r)
    .collect::<Vec<_>>();

    if let Some(json) = &c.out_json {
        write_to(json, &write_summaries(&records), out)?;
    }
    if c.out_json.as_deref() != Some(Path::new("-")) {
        write_table(out, &record_table(&records), path)?;
    }
    Ok(())
}

fn write_table(out: &mut dyn Write, text: &str, path: &Path) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
}

fn flag(d: Option<bool>) -> &'static str {
    match d {
        Some(true) => "yes",
        Some(false) => "no",
        None => "",
    }
}

fn interval(r: &SummaryRecord) -> String {
    format!("[{:+.3}, {:+.3}]", r.ci_lo, r.ci_hi)
}

/// Decision columns appended after the plot's own columns.
fn decision_cells(r: &SummaryRecord) -> Vec<String> {
    vec![
        interval(r),
        flag(r.negligible).into(),
        flag(r.meaningful).into(),
    ]
}

const DECISION_HEADERS: [&str; 3] = ["Interval", "Negligible", "Meaningful"];

/// Plot column order, followed by the interval and decisions.
pub fn study_table(results: &[StudyResult], records: &[SummaryRecord]) -> String {
    let mut header: Vec<String> = MetadataColumn::DEFAULT
        .iter()
        .map(|c| c.header().to_string())
        .collect();
    header.extend(DECISION_HEADERS.map(String::from));
    header.push(String::new());
    let rows = results.iter().zip(records).map(|(res, rec)| {
        let mut row: Vec<String> = MetadataColumn::DEFAULT
            .iter()
            .map(|c| {
                let cell = c.cell(&res.study, &res.summary);
                cell.chars().take(c.max_chars()).collect()
            })
            .collect();
        row.extend(decision_cells(rec));
        row.push(if res.gated {
            "control mean near 0".into()
        } else {
            String::new()
        });
        row
    });
    format_rows(header, rows)
}

pub fn record_table(records: &[SummaryRecord]) -> String {
    let mut header: Vec<String> = ["ID", "Ls%", "Ms%"].map(String::from).to_vec();
    header.extend(DECISION_HEADERS.map(String::from));
    let rows = records.iter().map(|r| {
        let mut row = vec![
            r.id.to_string(),
            format!("{:.1}", r.ls_pct),
            format!("{:.1}", r.ms_pct),
        ];
        row.extend(decision_cells(r));
        row
    });
    format_rows(header, rows)
}

fn format_rows(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let rows: Vec<Vec<String>> = std::iter::once(header).chain(rows).collect();
    let mut widths = vec![0; rows[0].len()];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut s = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn threshold_bounds() {
        assert_eq!(parse_threshold("0.3"), Ok(0.3));
        assert_eq!(parse_threshold("10"), Ok(10.0));
        assert!(parse_threshold("0").is_err());
        assert!(parse_threshold("-0.1").is_err());
        assert!(parse_threshold("10.01").is_err());
        assert!(parse_threshold("NaN").is_err());
        assert!(parse_threshold("abc").is_err());
    }

    #[test]
    fn samples_lower_bound() {
        assert_eq!(parse_samples("1000"), Ok(1000));
        assert!(parse_samples("999").is_err());
        assert!(parse_samples("-5").is_err());
    }

    #[test]
    fn seed_flag_overrides_env() {
        std::env::set_var("CONTRA_SEED", "9");
        let from_env = Cli::try_parse_from(["contra", "analyze", "x.csv"]).unwrap();
        let from_flag = Cli::try_parse_from(["contra", "analyze", "x.csv", "--seed", "5"]).unwrap();
        std::env::remove_var("CONTRA_SEED");
        let seed = |c: Cli| match c.command {
            Command::Analyze(a) => a.seed,
            _ => unreachable!(),
        };
        assert_eq!(seed(from_env), 9);
        assert_eq!(seed(from_flag), 5);
    }

    #[test]
    fn positional_and_flag_input_are_exclusive() {
        assert!(Cli::try_parse_from(["contra", "analyze", "a.csv", "--input", "b.csv"]).is_err());
        assert!(Cli::try_parse_from(["contra", "analyze"]).is_err());
        assert!(Cli::try_parse_from(["contra", "analyze", "--input", "b.csv"]).is_ok());
    }

    #[test]
    fn table_columns_are_aligned() {
        let t = format_rows(
            vec!["ID".into(), "Ms%".into()],
            vec![
                vec!["1".into(), "13.0".into()],
                vec!["22".into(), "9.5".into()],
            ]
            .into_iter(),
        );
        assert_eq!(t, "ID  Ms%\n1   13.0\n22  9.5\n");
    }
}
