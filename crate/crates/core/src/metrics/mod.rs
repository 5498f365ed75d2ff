//! Output-similarity metrics over a (prediction, reference) pair.
//!
//! Token metrics (ROUGE, BLEU, METEOR) operate on [`TokenSeq`]s; edit distance
//! and exact match operate on the raw snippet text. Every score lies in `[0, 1]`.

mod bleu;
mod checker;
mod edit;
mod exact;
mod meteor;
mod ngram;
mod rouge;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu, Smoothing};
pub use checker::{compilation_accuracy, CheckOutcome, CheckerKind, CheckerSet, SyntaxChecker};
pub use edit::{edit_distance_norm, flatten_lines, levenshtein, LineBreak};
pub use exact::exact_match;
pub use meteor::{meteor, MeteorParams};
pub use ngram::{ngram_counts, ngrams};
pub use rouge::{lcs_length, rouge_l, rouge_n, Prf};

use crate::corpus::{Language, Sample};
use crate::textprep::{tokenize, TokenizerConfig};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrfPart {
    P,
    R,
    F1,
}

impl PrfPart {
    pub const ALL: [PrfPart; 3] = [PrfPart::P, PrfPart::R, PrfPart::F1];

    pub fn pick(self, prf: Prf) -> f64 {
        match self {
            PrfPart::P => prf.precision,
            PrfPart::R => prf.recall,
            PrfPart::F1 => prf.f1,
        }
    }
}

/// One of the 23 output-similarity metrics. `Ord` is the canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Ca,
    RougeN(u8, PrfPart),
    RougeL(PrfPart),
    Bleu(u8),
    Em,
    Meteor,
    Ed,
}

macro_rules! rouge_n_row {
    ($n:literal) => {
        [
            MetricId::RougeN($n, PrfPart::P),
            MetricId::RougeN($n, PrfPart::R),
            MetricId::RougeN($n, PrfPart::F1),
        ]
    };
}

const fn flatten23(r: [[MetricId; 3]; 5]) -> [MetricId; 23] {
    [
        MetricId::Ca,
        r[0][0],
        r[0][1],
        r[0][2],
        r[1][0],
        r[1][1],
        r[1][2],
        r[2][0],
        r[2][1],
        r[2][2],
        r[3][0],
        r[3][1],
        r[3][2],
        r[4][0],
        r[4][1],
        r[4][2],
        MetricId::Bleu(1),
        MetricId::Bleu(2),
        MetricId::Bleu(3),
        MetricId::Bleu(4),
        MetricId::Em,
        MetricId::Meteor,
        MetricId::Ed,
    ]
}

impl MetricId {
    pub const ALL: [MetricId; 23] = flatten23([
        rouge_n_row!(1),
        rouge_n_row!(2),
        rouge_n_row!(3),
        rouge_n_row!(4),
        [
            MetricId::RougeL(PrfPart::P),
            MetricId::RougeL(PrfPart::R),
            MetricId::RougeL(PrfPart::F1),
        ],
    ]);

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 23] = [
            "CA",
            "ROUGE-1-P",
            "ROUGE-1-R",
            "ROUGE-1-F1",
            "ROUGE-2-P",
            "ROUGE-2-R",
            "ROUGE-2-F1",
            "ROUGE-3-P",
            "ROUGE-3-R",
            "ROUGE-3-F1",
            "ROUGE-4-P",
            "ROUGE-4-R",
            "ROUGE-4-F1",
            "ROUGE-L-P",
            "ROUGE-L-R",
            "ROUGE-L-F1",
            "BLEU-1",
            "BLEU-2",
            "BLEU-3",
            "BLEU-4",
            "EM",
            "METEOR",
            "ED",
        ];
        NAMES[self.index()]
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        let part = |p: PrfPart| p as usize;
        match self {
            MetricId::Ca => 0,
            MetricId::RougeN(n, p) => 1 + 3 * (n as usize - 1) + part(p),
            MetricId::RougeL(p) => 13 + part(p),
            MetricId::Bleu(n) => 16 + (n as usize - 1),
            MetricId::Em => 20,
            MetricId::Meteor => 21,
            MetricId::Ed => 22,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

impl Serialize for MetricId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scores keyed by metric, iterated in canonical order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricVector(BTreeMap<MetricId, f64>);

impl MetricVector {
    pub fn new() -> Self {
        MetricVector(BTreeMap::new())
    }

    pub fn insert(&mut self, id: MetricId, score: f64) {
        self.0.insert(id, score);
    }

    pub fn get(&self, id: MetricId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = MetricId> + '_ {
        self.0.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(MetricId, f64)> for MetricVector {
    fn from_iter<I: IntoIterator<Item = (MetricId, f64)>>(iter: I) -> Self {
        MetricVector(iter.into_iter().collect())
    }
}

/// Runs `f` on a DP row of `len` cells, on the stack for short inputs.
pub(crate) fn with_scratch_row<R>(len: usize, f: impl FnOnce(&mut [usize]) -> R) -> R {
    const STACK: usize = 64;
    if len <= STACK {
        let mut buf = [0usize; STACK];
        f(&mut buf[..len])
    } else {
        f(&mut vec![0usize; len])
    }
}

/// Everything that determines a sample's scores, apart from the CA checker.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Tokenizer for ROUGE and BLEU.
    pub tokenizer: TokenizerConfig,
    pub tokenizer_by_language: BTreeMap<Language, TokenizerConfig>,
    /// Tokenizer for METEOR's unigram alignment.
    pub meteor_tokenizer: TokenizerConfig,
    pub meteor: MeteorParams,
    pub smoothing: Smoothing,
    /// How line breaks are rendered before character-level edit distance.
    pub line_break: LineBreak,
    /// Enabled metrics, sorted canonically.
    pub metrics: Vec<MetricId>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tokenizer: TokenizerConfig::CODE,
            tokenizer_by_language: BTreeMap::new(),
            meteor_tokenizer: TokenizerConfig::CODE_PUNCT,
            meteor: MeteorParams::default(),
            smoothing: Smoothing::None,
            line_break: LineBreak::Escaped,
            metrics: MetricId::ALL.to_vec(),
        }
    }
}

impl EvalConfig {
    pub fn tokenizer_for(&self, language: Language) -> TokenizerConfig {
        self.tokenizer_by_language
            .get(&language)
            .copied()
            .unwrap_or(self.tokenizer)
    }

    pub fn has(&self, id: MetricId) -> bool {
        self.metrics.binary_search(&id).is_ok()
    }

    pub fn without_ca(mut self) -> Self {
        self.metrics.retain(|m| *m != MetricId::Ca);
        self
    }
}

/// Scores samples under one configuration.
#[derive(Debug, Clone)]
pub struct Evaluator {
    pub config: EvalConfig,
    pub checkers: CheckerSet,
}

impl Evaluator {
    pub fn new(config: EvalConfig, checkers: CheckerSet) -> Self {
        let config = if checkers.is_disabled() {
            config.without_ca()
        } else {
            config
        };
        Evaluator { config, checkers }
    }

    /// Token metrics only; CA is dropped.
    pub fn without_checker(config: EvalConfig) -> Self {
        Evaluator::new(config, CheckerSet::Disabled)
    }

    pub fn metrics(&self) -> &[MetricId] {
        &self.config.metrics
    }

    pub fn evaluate(&self, sample: &Sample) -> Result<MetricVector> {
        evaluate_sample(sample, self)
    }
}

/// Computes every enabled metric for one sample.
pub fn evaluate_sample(sample: &Sample, evaluator: &Evaluator) -> Result<MetricVector> {
    let cfg = &evaluator.config;
    let pred_text = sample.prediction.as_str();
    let ref_text = sample.reference.as_str();
    let mut out = MetricVector::new();

    if cfg.has(MetricId::Ca) {
        let outcome = evaluator.checkers.check(sample.language, pred_text)?;
        if let Some(diag) = &outcome.diagnostic {
            log::debug!("{}: checker: {}", sample.id, diag.trim());
        }
        out.insert(MetricId::Ca, if outcome.accepted { 1.0 } else { 0.0 });
    }

    let tok = cfg.tokenizer_for(sample.language);
    let pred = tokenize(pred_text, tok);
    let reference = tokenize(ref_text, tok);
    for n in 1..=4u8 {
        if PrfPart::ALL
            .iter()
            .any(|p| cfg.has(MetricId::RougeN(n, *p)))
        {
            let prf = rouge_n(&pred, &reference, n as usize)?;
            for p in PrfPart::ALL {
                if cfg.has(MetricId::RougeN(n, p)) {
                    out.insert(MetricId::RougeN(n, p), p.pick(prf));
                }
            }
        }
    }
    if PrfPart::ALL.iter().any(|p| cfg.has(MetricId::RougeL(*p))) {
        let prf = rouge_l(&pred, &reference);
        for p in PrfPart::ALL {
            if cfg.has(MetricId::RougeL(p)) {
                out.insert(MetricId::RougeL(p), p.pick(prf));
            }
        }
    }
    for n in 1..=4u8 {
        if cfg.has(MetricId::Bleu(n)) {
            out.insert(
                MetricId::Bleu(n),
                bleu(&pred, &reference, n as usize, cfg.smoothing),
            );
        }
    }
    if cfg.has(MetricId::Em) {
        out.insert(MetricId::Em, exact_match(pred_text, ref_text));
    }
    if cfg.has(MetricId::Meteor) {
        let pred = tokenize(pred_text, cfg.meteor_tokenizer);
        let reference = tokenize(ref_text, cfg.meteor_tokenizer);
        out.insert(MetricId::Meteor, meteor(&pred, &reference, &cfg.meteor));
    }
    if cfg.has(MetricId::Ed) {
        let p = flatten_lines(pred_text, cfg.line_break);
        let r = flatten_lines(ref_text, cfg.line_break);
        out.insert(MetricId::Ed, edit_distance_norm(&p, &r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(reference: &str, prediction: &str, language: Language) -> Sample {
        Sample {
            id: "t".into(),
            intent: String::new(),
            reference: reference.into(),
            prediction: prediction.into(),
            sc: None,
            language,
        }
    }

    #[test]
    fn canonical_order_and_names() {
        let mut sorted = MetricId::ALL;
        sorted.sort();
        assert_eq!(sorted, MetricId::ALL);
        for (i, m) in MetricId::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(m.name().parse::<MetricId>().unwrap(), *m);
        }
        assert_eq!(MetricId::RougeN(2, PrfPart::F1).name(), "ROUGE-2-F1");
        assert!("ROUGE-5-P".parse::<MetricId>().is_err());
    }

    #[test]
    fn identity_bundle() {
        let ev = Evaluator::new(EvalConfig::default(), CheckerSet::Builtin);
        let s = sample(
            "xor EDX, EDX\nmov DL, 5",
            "xor EDX, EDX\nmov DL, 5",
            Language::Assembly,
        );
        let v = evaluate_sample(&s, &ev).unwrap();
        assert_eq!(v.len(), 23);
        for (m, score) in v.iter() {
            match m {
                MetricId::Meteor => assert!((0.5..1.0).contains(&score)),
                _ => assert_eq!(score, 1.0, "{m}"),
            }
        }
    }

    #[test]
    fn empty_prediction() {
        let ev = Evaluator::without_checker(EvalConfig::default());
        let v = evaluate_sample(&sample("mov eax, 5", "", Language::Assembly), &ev).unwrap();
        assert_eq!(v.len(), 22);
        for (m, score) in v.iter() {
            assert_eq!(score, 0.0, "{m}");
        }
    }

    #[test]
    fn break_vs_sys_exit() {
        let ev = Evaluator::without_checker(EvalConfig::default());
        let v = evaluate_sample(&sample("break", "sys.exit()", Language::PythonLike), &ev).unwrap();
        assert_eq!(v.get(MetricId::RougeN(4, PrfPart::F1)), Some(0.0));
        assert_eq!(v.get(MetricId::Em), Some(0.0));
        assert!((v.get(MetricId::Ed).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn subset_configuration() {
        let cfg = EvalConfig {
            metrics: vec![MetricId::Bleu(1), MetricId::Ed],
            ..EvalConfig::default()
        };
        let ev = Evaluator::without_checker(cfg);
        let v = evaluate_sample(&sample("a b", "a b", Language::Other), &ev).unwrap();
        assert_eq!(
            v.ids().collect::<Vec<_>>(),
            [MetricId::Bleu(1), MetricId::Ed]
        );
    }
}
