//! Command-line front end: `eval`, `analyze` and `preprocess`.
//!
//! The pipeline is file-mediated. `eval` writes per-sample scores, SC labels
//! may be added to the corpus afterwards, and `analyze` reads both back.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::MetricsConfig;
use crate::corpus::{
    load_corpus, read_results, render_results, split_corpus, write_corpus, Corpus, CorpusFormat,
    ResultFormat, ResultTable, Sample, SplitSpec,
};
use crate::metrics::Evaluator;
use crate::parallel;
use crate::report::{render_correlation_table, render_offset_table, AnalysisReport, DocFormat};
use crate::stats::PartitionKind;
use crate::textprep::{
    builtin_rules, destandardize, filter_stopwords, load_rules, standardize, tokenize,
    StandardizationMap, StopwordList, TokenizerConfig, TokenizerMode,
};
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const RESULTS_META_FILE: &str = "results.meta.json";
pub const STANDARDIZED_FILE: &str = "standardized.jsonl";
pub const MAPS_FILE: &str = "standardized.maps.jsonl";
pub const DESTANDARDIZED_FILE: &str = "destandardized.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "evalkit",
    version,
    about = "Output-similarity metrics for generated code"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every sample of a corpus.
    Eval(EvalArgs),
    /// Offset, correlation and boxplot analysis of scored, labeled samples.
    Analyze(AnalyzeArgs),
    /// Standardize intents (or invert a previous standardization).
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Csv => CorpusFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl CorpusArgs {
    pub fn load(&self) -> Result<Corpus> {
        let format = self
            .format
            .map(CorpusFormat::from)
            .unwrap_or_else(|| CorpusFormat::from_path(&self.corpus));
        load_corpus(&self.corpus, format)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// TOML metric configuration.
    #[arg(long)]
    pub metrics_config: Option<PathBuf>,
    /// `none`, `builtin`, `external` (commands from the metric config) or `cmd:<template>`.
    #[arg(long, default_value = "builtin")]
    pub checker: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads and concurrent checker processes (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Per-sample scores written by `eval`; defaults to `<out>/results.csv`.
    #[arg(long)]
    pub results: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Partitions to tabulate, in order.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "whole,correct,wrong"
    )]
    pub partition: Vec<PartitionArg>,
    /// Skip the correlation table.
    #[arg(long)]
    pub no_correlation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionArg {
    Whole,
    Correct,
    Wrong,
}

impl From<PartitionArg> for PartitionKind {
    fn from(p: PartitionArg) -> Self {
        match p {
            PartitionArg::Whole => PartitionKind::Whole,
            PartitionArg::Correct => PartitionKind::Correct,
            PartitionArg::Wrong => PartitionKind::Wrong,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Rules file of `name = regex` lines; built-in literal rules when omitted.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Drop stopwords from intents after standardization.
    #[arg(long)]
    pub filter_stopwords: bool,
    /// Stopword file; overrides the environment variable and the built-in list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Invert a previous run using its map sidecar instead of standardizing.
    #[arg(long, value_name = "MAPS")]
    pub destandardize: Option<PathBuf>,
    /// Also write a train/valid/test split, e.g. `0.8,0.1,0.1`.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Runs a parsed command line and maps failures to exit codes.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Eval(a) => cmd_eval(a).map(|_| ()),
        Command::Analyze(a) => cmd_analyze(a).map(|_| ()),
        Command::Preprocess(a) => cmd_preprocess(a).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class() as u8)
        }
    }
}

fn create_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub results: ResultTable,
    pub results_path: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalOutput> {
    let config = match &args.metrics_config {
        Some(p) => MetricsConfig::load(p)?,
        None => MetricsConfig::default(),
    };
    let jobs = effective_jobs(args.jobs);
    let checkers = config.checkers(&args.checker, jobs)?;
    let corpus = args.corpus.load()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    let evaluator = Evaluator::new(config.eval.clone(), checkers);

    let mut samples: Vec<&Sample> = corpus.samples.iter().collect();
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    log::info!("scoring {} samples with {jobs} jobs", samples.len());
    let vectors = parallel::try_map_ordered(&samples, jobs, |s| evaluator.evaluate(s))?;
    let rows = samples.iter().map(|s| s.id.clone()).zip(vectors).collect();
    let results = ResultTable::from_rows(rows)?;

    create_out_dir(&args.out)?;
    let results_path = args.out.join(RESULTS_FILE);
    write_file(&results_path, render_results(&results, ResultFormat::Csv))?;
    let mut meta = config.describe(&args.checker);
    meta["corpus"] = json!(args.corpus.corpus.display().to_string());
    meta["samples"] = json!(corpus.len());
    meta["metrics"] = json!(evaluator
        .metrics()
        .iter()
        .map(|m| m.name())
        .collect::<Vec<_>>());
    let meta_text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    write_file(&args.out.join(RESULTS_META_FILE), meta_text)?;
    Ok(EvalOutput {
        results,
        results_path,
    })
}

fn effective_jobs(jobs: usize) -> usize {
    if jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    }
}

/// File names written by `analyze`, relative to the output directory.
pub fn analysis_files() -> Vec<String> {
    let mut files = Vec::new();
    for stem in ["offsets", "correlation"] {
        for f in DocFormat::ALL {
            files.push(format!("{stem}.{}", f.extension()));
        }
    }
    files.extend(["boxplot.csv", "boxplot_marker.csv", "summary.json"].map(String::from));
    files
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport> {
    let corpus = args.corpus.load()?;
    let results_path = args
        .results
        .clone()
        .unwrap_or_else(|| args.out.join(RESULTS_FILE));
    let format = match results_path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => ResultFormat::Jsonl,
        _ => ResultFormat::Csv,
    };
    let scores = read_results(&results_path, format)?;
    let mut kinds: Vec<PartitionKind> = Vec::new();
    for p in &args.partition {
        let k = PartitionKind::from(*p);
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(Error::Config("no partition selected".into()));
    }
    let report = AnalysisReport::build(&corpus, &scores, &kinds)?;
    if report.unlabeled > 0 {
        log::warn!(
            "{} unlabeled samples excluded from the analysis",
            report.unlabeled
        );
    }

    create_out_dir(&args.out)?;
    for f in DocFormat::ALL {
        let offsets = render_offset_table(&report.offsets, f)?;
        write_file(
            &args.out.join(format!("offsets.{}", f.extension())),
            offsets,
        )?;
        if !args.no_correlation {
            let corr = render_correlation_table(&report.correlations, f);
            write_file(
                &args.out.join(format!("correlation.{}", f.extension())),
                corr,
            )?;
        }
    }
    write_file(&args.out.join("boxplot.csv"), &report.boxplot.data_csv)?;
    write_file(
        &args.out.join("boxplot_marker.csv"),
        &report.boxplot.marker_csv,
    )?;
    let summary = json!({
        "samples": report.samples,
        "labeled": report.samples - report.unlabeled,
        "unlabeled": report.unlabeled,
        "partitions": report.offsets.columns.iter()
            .map(|(k, t)| (k.name(), t.as_ref().map_or(0, |t| t.n)))
            .collect::<BTreeMap<_, _>>(),
        "results": results_path.file_name().map(|f| f.to_string_lossy().into_owned()),
    });
    write_file(
        &args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    Ok(report)
}

/// Whitespace split of an intent that keeps case and line structure out.
const INTENT_WORDS: TokenizerConfig = TokenizerConfig {
    mode: TokenizerMode::Whitespace,
    newline_is_token: false,
    lowercase: false,
};

/// One line of the map sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapRecord {
    pub id: String,
    pub map: StandardizationMap,
}

pub fn read_maps(path: &Path) -> Result<BTreeMap<String, StandardizationMap>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut maps = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: MapRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rec.map.validate()?;
        if maps.insert(rec.id.clone(), rec.map).is_some() {
            return Err(Error::DuplicateId(rec.id));
        }
    }
    Ok(maps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutput {
    pub corpus: Corpus,
    /// Empty when inverting.
    pub maps: Vec<MapRecord>,
    pub written: Vec<PathBuf>,
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<PreprocessOutput> {
    let rules = match &args.rules {
        Some(p) => load_rules(p)?,
        None => builtin_rules(),
    };
    let stopwords = if args.filter_stopwords {
        Some(match &args.stopwords {
            Some(p) => StopwordList::load(p)?,
            None => StopwordList::from_env_or_default()?,
        })
    } else {
        None
    };
    let split = match &args.split {
        Some(f) if f.len() != 3 => {
            return Err(Error::Config(format!(
                "--split needs 3 fractions, got {}",
                f.len()
            )));
        }
        Some(f) => {
            let spec = SplitSpec {
                train: f[0],
                valid: f[1],
                test: f[2],
                seed: args.seed,
            };
            spec.validate()?;
            Some(spec)
        }
        None => None,
    };
    let corpus = args.corpus.load()?;
    create_out_dir(&args.out)?;
    let mut written = Vec::new();

    let (out_corpus, maps) = match &args.destandardize {
        Some(maps_path) => {
            let maps = read_maps(maps_path)?;
            let samples = corpus
                .samples
                .iter()
                .map(|s| {
                    let map = maps.get(&s.id).ok_or_else(|| Error::InvalidSample {
                        id: s.id.clone(),
                        message: format!("no entry in {}", maps_path.display()),
                    })?;
                    let mut s = s.clone();
                    s.intent = destandardize(&s.intent, map).text;
                    s.prediction = destandardize(&s.prediction, map).text;
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let out = Corpus {
                samples,
                provenance: corpus.provenance.clone(),
            };
            let path = args.out.join(DESTANDARDIZED_FILE);
            write_corpus(&out, &path)?;
            written.push(path);
            (out, Vec::new())
        }
        None => {
            let mut maps = Vec::with_capacity(corpus.len());
            let mut samples = Vec::with_capacity(corpus.len());
            for s in &corpus.samples {
                let (mut intent, map) = standardize(&s.intent, &rules);
                if let Some(stop) = &stopwords {
                    intent = filter_stopwords(&tokenize(&intent, INTENT_WORDS), stop).join(" ");
                }
                let mut s = s.clone();
                s.intent = intent;
                maps.push(MapRecord {
                    id: s.id.clone(),
                    map,
                });
                samples.push(s);
            }
            let out = Corpus {
                samples,
                provenance: corpus.provenance.clone(),
            };
            let path = args.out.join(STANDARDIZED_FILE);
            write_corpus(&out, &path)?;
            written.push(path);
            let maps_path = args.out.join(MAPS_FILE);
            let mut text = String::new();
            for m in &maps {
                text.push_str(&serde_json::to_string(m).expect("map serializes"));
                text.push('\n');
            }
            write_file(&maps_path, text)?;
            written.push(maps_path);
            (out, maps)
        }
    };

    if let Some(spec) = split {
        let (train, valid, test) = split_corpus(&out_corpus, &spec)?;
        for (name, part) in [("train", train), ("valid", valid), ("test", test)] {
            let path = args.out.join(format!("{name}.jsonl"));
            write_corpus(&part, &path)?;
            written.push(path);
        }
    }
    Ok(PreprocessOutput {
        corpus: out_corpus,
        maps,
        written,
    })
}
