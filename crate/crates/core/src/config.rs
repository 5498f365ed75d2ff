//! Metric configuration file (TOML).
//!
//! ```toml
//! metrics = ["ROUGE-L-F1", "BLEU-4", "ED"]   # optional, default: all 23
//! line_break = "escaped"                     # or "raw"
//!
//! [tokenizer.default]
//! mode = "whitespace"
//! newline_is_token = true
//!
//! [tokenizer.meteor]
//! mode = "code-punct"
//! newline_is_token = true
//!
//! [bleu]
//! smoothing = "epsilon"
//! epsilon = 0.1
//!
//! [meteor]
//! alpha = 0.9
//! beta = 3.0
//! gamma = 0.5
//!
//! [checker]
//! timeout_ms = 10000
//! assembly = "nasm -f elf32 {file} -o /dev/null"
//! python-like = "python3 -m py_compile {file}"
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::corpus::Language;
use crate::metrics::{
    CheckerSet, EvalConfig, LineBreak, MeteorParams, MetricId, Smoothing, SyntaxChecker,
};
use crate::textprep::TokenizerConfig;
use crate::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    metrics: Option<Vec<MetricId>>,
    line_break: Option<LineBreak>,
    #[serde(default)]
    tokenizer: RawTokenizers,
    meteor: Option<MeteorParams>,
    #[serde(default)]
    bleu: RawBleu,
    #[serde(default)]
    checker: RawChecker,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTokenizers {
    default: Option<TokenizerConfig>,
    assembly: Option<TokenizerConfig>,
    #[serde(rename = "python-like")]
    python_like: Option<TokenizerConfig>,
    other: Option<TokenizerConfig>,
    meteor: Option<TokenizerConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBleu {
    smoothing: Option<String>,
    epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecker {
    timeout_ms: Option<u64>,
    assembly: Option<String>,
    #[serde(rename = "python-like")]
    python_like: Option<String>,
    other: Option<String>,
}

/// Parsed metric configuration plus the external checker commands it names.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub eval: EvalConfig,
    pub checker_commands: BTreeMap<Language, String>,
    pub checker_timeout: Duration,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            eval: EvalConfig::default(),
            checker_commands: BTreeMap::new(),
            checker_timeout: SyntaxChecker::DEFAULT_TIMEOUT,
        }
    }
}

impl MetricsConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut eval = EvalConfig::default();
        if let Some(mut metrics) = raw.metrics {
            metrics.sort();
            metrics.dedup();
            if metrics.is_empty() {
                return Err(Error::Config("metric set is empty".into()));
            }
            eval.metrics = metrics;
        }
        if let Some(lb) = raw.line_break {
            eval.line_break = lb;
        }
        if let Some(t) = raw.tokenizer.default {
            eval.tokenizer = t;
        }
        for (lang, t) in [
            (Language::Assembly, raw.tokenizer.assembly),
            (Language::PythonLike, raw.tokenizer.python_like),
            (Language::Other, raw.tokenizer.other),
        ] {
            if let Some(t) = t {
                eval.tokenizer_by_language.insert(lang, t);
            }
        }
        if let Some(t) = raw.tokenizer.meteor {
            eval.meteor_tokenizer = t;
        }
        if let Some(m) = raw.meteor {
            m.validate()?;
            eval.meteor = m;
        }
        let epsilon = raw.bleu.epsilon.unwrap_or(Smoothing::DEFAULT_EPSILON);
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "BLEU epsilon {epsilon} not in (0, 1]"
            )));
        }
        eval.smoothing = match raw.bleu.smoothing.as_deref() {
            None | Some("none") => Smoothing::None,
            Some("epsilon") => Smoothing::Epsilon(epsilon),
            Some(other) => {
                return Err(Error::Config(format!("unknown BLEU smoothing {other:?}")));
            }
        };

        let mut checker_commands = BTreeMap::new();
        for (lang, cmd) in [
            (Language::Assembly, raw.checker.assembly),
            (Language::PythonLike, raw.checker.python_like),
            (Language::Other, raw.checker.other),
        ] {
            if let Some(cmd) = cmd {
                if cmd.trim().is_empty() {
                    return Err(Error::Config(format!("empty checker command for {lang}")));
                }
                checker_commands.insert(lang, cmd);
            }
        }
        let checker_timeout = match raw.checker.timeout_ms {
            Some(0) => return Err(Error::Config("checker timeout must be positive".into())),
            Some(ms) => Duration::from_millis(ms),
            None => SyntaxChecker::DEFAULT_TIMEOUT,
        };
        Ok(MetricsConfig {
            eval,
            checker_commands,
            checker_timeout,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        MetricsConfig::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checker set for a `--checker` selection: `none`, `builtin`, `external`
    /// (commands from this config) or `cmd:<template>` (one command for all languages).
    pub fn checkers(&self, selection: &str, max_processes: usize) -> Result<CheckerSet> {
        let external = |template: &str| {
            SyntaxChecker::external(template, self.checker_timeout).with_concurrency(max_processes)
        };
        match selection {
            "none" => Ok(CheckerSet::Disabled),
            "builtin" => Ok(CheckerSet::Builtin),
            "external" => {
                if self.checker_commands.is_empty() {
                    return Err(Error::Config(
                        "--checker external needs [checker] commands in the metrics config".into(),
                    ));
                }
                // One shared process cap across languages.
                let mut map = BTreeMap::new();
                let base = external("");
                for (lang, cmd) in &self.checker_commands {
                    let mut c = base.clone();
                    c.name = cmd
                        .split_whitespace()
                        .next()
                        .unwrap_or("external")
                        .to_string();
                    c.kind = crate::metrics::CheckerKind::External {
                        template: cmd.clone(),
                    };
                    map.insert(*lang, c);
                }
                Ok(CheckerSet::ByLanguage(map))
            }
            s => match s.strip_prefix("cmd:") {
                Some(template) if !template.trim().is_empty() => {
                    let c = external(template);
                    let map = [Language::Assembly, Language::PythonLike, Language::Other]
                        .into_iter()
                        .map(|l| (l, c.clone()))
                        .collect();
                    Ok(CheckerSet::ByLanguage(map))
                }
                _ => Err(Error::Config(format!("unknown checker selection {s:?}"))),
            },
        }
    }

    /// Run metadata recorded next to result files.
    pub fn describe(&self, checker: &str) -> serde_json::Value {
        let e = &self.eval;
        let by_lang: BTreeMap<&str, TokenizerConfig> = e
            .tokenizer_by_language
            .iter()
            .map(|(l, t)| (l.as_str(), *t))
            .collect();
        json!({
            "metrics": e.metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
            "tokenizer": e.tokenizer,
            "tokenizer_by_language": by_lang,
            "meteor_tokenizer": e.meteor_tokenizer,
            "meteor": e.meteor,
            "bleu_smoothing": e.smoothing.to_string(),
            "line_break": e.line_break,
            "checker": checker,
            "checker_commands": self.checker_commands.iter().map(|(l, c)| (l.as_str(), c)).collect::<BTreeMap<_, _>>(),
            "checker_timeout_ms": self.checker_timeout.as_millis() as u64,
        })
    }
}
