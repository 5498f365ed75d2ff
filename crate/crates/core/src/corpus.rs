//! Evaluation records, corpus I/O, train/valid/test splitting and the
//! per-sample result table.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{MetricId, MetricVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "assembly")]
    Assembly,
    #[serde(rename = "python-like")]
    PythonLike,
    #[serde(rename = "other")]
    Other,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Assembly => "assembly",
            Language::PythonLike => "python-like",
            Language::Other => "other",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "assembly" => Ok(Language::Assembly),
            "python-like" => Ok(Language::PythonLike),
            "other" => Ok(Language::Other),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

/// Human semantic-correctness judgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sc {
    Wrong,
    Correct,
}

impl Sc {
    pub fn as_f64(self) -> f64 {
        match self {
            Sc::Wrong => 0.0,
            Sc::Correct => 1.0,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Sc::Wrong => 0,
            Sc::Correct => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub intent: String,
    pub reference: String,
    pub prediction: String,
    pub sc: Option<Sc>,
    pub language: Language,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub samples: Vec<Sample>,
    pub provenance: BTreeMap<String, String>,
}

impl Corpus {
    /// Builds a corpus, enforcing id uniqueness.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::InvalidSample {
                    id: s.id.clone(),
                    message: "empty id".into(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus {
            samples,
            provenance: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&Sample, Sc)> {
        self.samples.iter().filter_map(|s| s.sc.map(|sc| (s, sc)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected jsonl or csv)")),
        }
    }
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    intent: String,
    reference: String,
    #[serde(default)]
    prediction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sc: Option<serde_json::Value>,
    language: Language,
}

#[derive(Debug, Deserialize)]
struct CsvRecord {
    id: String,
    intent: String,
    reference: String,
    #[serde(default)]
    prediction: String,
    #[serde(default)]
    sc: Option<String>,
    language: String,
}

fn parse_sc(id: &str, value: Option<&serde_json::Value>) -> Result<Option<Sc>> {
    use serde_json::Value;
    let invalid = |v: &Value| Error::InvalidSc {
        id: id.to_string(),
        value: v.to_string(),
    };
    match value {
        None | Some(Value::Null) => Ok(None),
        Some(v @ Value::Number(n)) => match n.as_u64() {
            Some(0) => Ok(Some(Sc::Wrong)),
            Some(1) => Ok(Some(Sc::Correct)),
            _ => Err(invalid(v)),
        },
        Some(Value::String(s)) => parse_sc_text(id, s),
        Some(v) => Err(invalid(v)),
    }
}

fn parse_sc_text(id: &str, s: &str) -> Result<Option<Sc>> {
    match s.trim() {
        "" => Ok(None),
        "0" => Ok(Some(Sc::Wrong)),
        "1" => Ok(Some(Sc::Correct)),
        other => Err(Error::InvalidSc {
            id: id.to_string(),
            value: other.to_string(),
        }),
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let samples = match format {
        CorpusFormat::Jsonl => read_jsonl(path, BufReader::new(file))?,
        CorpusFormat::Csv => read_csv(path, file)?,
    };
    let mut corpus = Corpus::new(samples)?;
    corpus
        .provenance
        .insert("source".into(), path.display().to_string());
    Ok(corpus)
}

fn read_jsonl(path: &Path, reader: impl BufRead) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let sc = parse_sc(&rec.id, rec.sc.as_ref())?;
        samples.push(Sample {
            id: rec.id,
            intent: rec.intent,
            reference: rec.reference,
            prediction: rec.prediction,
            sc,
            language: rec.language,
        });
    }
    Ok(samples)
}

fn read_csv(path: &Path, file: File) -> Result<Vec<Sample>> {
    let mut reader = csv::Reader::from_reader(file);
    let mut samples = Vec::new();
    for rec in reader.deserialize::<CsvRecord>() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let sc = parse_sc_text(&rec.id, rec.sc.as_deref().unwrap_or(""))?;
        let language = rec
            .language
            .parse()
            .map_err(|message| Error::InvalidSample {
                id: rec.id.clone(),
                message,
            })?;
        samples.push(Sample {
            id: rec.id,
            intent: rec.intent,
            reference: rec.reference,
            prediction: rec.prediction,
            sc,
            language,
        });
    }
    Ok(samples)
}

/// Writes a corpus as canonical JSONL.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in &corpus.samples {
        let rec = Record {
            id: s.id.clone(),
            intent: s.intent.clone(),
            reference: s.reference.clone(),
            prediction: s.prediction.clone(),
            sc: s.sc.map(|sc| serde_json::Value::from(sc.as_u8())),
            language: s.language,
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Train/validation/test fractions plus shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.train, self.valid, self.test)
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train, self.valid, self.test];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidSplit(format!(
                "negative or non-finite fraction in {self}"
            )));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!(
                "fractions {self} do not sum to 1"
            )));
        }
        Ok(())
    }

    /// Split sizes: valid and test are floor-rounded, train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The small bias keeps e.g. 0.29 * 100 from flooring to 28.
        let floor = |frac: f64| ((n as f64) * frac + 1e-9).floor() as usize;
        let valid = floor(self.valid);
        let test = floor(self.test);
        (n - valid - test, valid, test)
    }
}

pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus)> {
    spec.validate()?;
    let n = corpus.len();
    let (n_train, n_valid, n_test) = spec.sizes(n);
    let starved = [
        (spec.train, n_train),
        (spec.valid, n_valid),
        (spec.test, n_test),
    ]
    .iter()
    .any(|&(frac, size)| frac > 0.0 && size == 0);
    if n < 3 || starved {
        return Err(Error::CorpusTooSmall {
            size: n,
            spec: spec.to_string(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let part = |idx: &[usize], split: &str| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        let mut c = Corpus {
            samples: idx.into_iter().map(|i| corpus.samples[i].clone()).collect(),
            provenance: corpus.provenance.clone(),
        };
        c.provenance.insert("split".into(), split.into());
        c
    };
    let (train, rest) = order.split_at(n_train);
    let (valid, test) = rest.split_at(n_valid);
    Ok((
        part(train, "train"),
        part(valid, "valid"),
        part(test, "test"),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Csv,
    Jsonl,
}

/// Per-sample scores, one row per sample, all rows over the same metric set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub metrics: Vec<MetricId>,
    pub rows: Vec<(String, MetricVector)>,
}

impl ResultTable {
    pub fn from_rows(rows: Vec<(String, MetricVector)>) -> Result<Self> {
        let metrics: Vec<MetricId> = rows
            .first()
            .map(|(_, v)| v.ids().collect())
            .unwrap_or_default();
        for (id, v) in &rows {
            if !v.ids().eq(metrics.iter().copied()) {
                return Err(Error::HeterogeneousMetrics(id.clone()));
            }
        }
        Ok(ResultTable { metrics, rows })
    }

    pub fn get(&self, id: &str) -> Option<&MetricVector> {
        self.rows.iter().find(|(r, _)| r == id).map(|(_, v)| v)
    }

    pub fn by_id(&self) -> BTreeMap<&str, &MetricVector> {
        self.rows.iter().map(|(id, v)| (id.as_str(), v)).collect()
    }
}

/// Fixed-precision rendering used for every score written to disk.
pub fn format_score(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_results(
    rows: &[(String, MetricVector)],
    path: &Path,
    format: ResultFormat,
) -> Result<()> {
    let table = ResultTable::from_rows(rows.to_vec())?;
    let text = render_results(&table, format);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn render_results(table: &ResultTable, format: ResultFormat) -> String {
    let mut out = String::new();
    match format {
        ResultFormat::Csv => {
            out.push_str("id");
            for m in &table.metrics {
                out.push(',');
                out.push_str(m.name());
            }
            out.push('\n');
            for (id, v) in &table.rows {
                out.push_str(&csv_field(id));
                for (_, score) in v.iter() {
                    out.push(',');
                    out.push_str(&format_score(score));
                }
                out.push('\n');
            }
        }
        ResultFormat::Jsonl => {
            for (id, v) in &table.rows {
                let scores: Vec<String> = v
                    .iter()
                    .map(|(m, s)| {
                        format!(
                            "{}:{}",
                            serde_json::to_string(m.name()).unwrap(),
                            format_score(s)
                        )
                    })
                    .collect();
                out.push_str(&format!(
                    "{{\"id\":{},\"scores\":{{{}}}}}\n",
                    serde_json::to_string(id).unwrap(),
                    scores.join(",")
                ));
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn read_results(path: &Path, format: ResultFormat) -> Result<ResultTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(path, &text, format)
}

pub fn parse_results(path: &Path, text: &str, format: ResultFormat) -> Result<ResultTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut rows = Vec::new();
    match format {
        ResultFormat::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let header = reader
                .headers()
                .map_err(|e| parse_err(1, e.to_string()))?
                .clone();
            if header.get(0) != Some("id") {
                return Err(parse_err(1, "first column must be `id`".into()));
            }
            let metrics = header
                .iter()
                .skip(1)
                .map(|name| name.parse::<MetricId>().map_err(|e| parse_err(1, e)))
                .collect::<Result<Vec<_>>>()?;
            for rec in reader.records() {
                let rec = rec.map_err(|e| {
                    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                    parse_err(line, e.to_string())
                })?;
                let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
                let mut v = MetricVector::new();
                for (m, field) in metrics.iter().zip(rec.iter().skip(1)) {
                    let score: f64 = field
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad score {field:?}")))?;
                    v.insert(*m, score);
                }
                rows.push((rec[0].to_string(), v));
            }
            if rows.is_empty() {
                return Ok(ResultTable { metrics, rows });
            }
        }
        ResultFormat::Jsonl => {
            #[derive(Deserialize)]
            struct Row {
                id: String,
                scores: serde_json::Map<String, serde_json::Value>,
            }
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let row: Row =
                    serde_json::from_str(line).map_err(|e| parse_err(idx + 1, e.to_string()))?;
                let mut v = MetricVector::new();
                for (name, score) in row.scores {
                    let m = name
                        .parse::<MetricId>()
                        .map_err(|e| parse_err(idx + 1, e))?;
                    let s = score
                        .as_f64()
                        .ok_or_else(|| parse_err(idx + 1, format!("bad score for {name}")))?;
                    v.insert(m, s);
                }
                rows.push((row.id, v));
            }
        }
    }
    ResultTable::from_rows(rows)
}
