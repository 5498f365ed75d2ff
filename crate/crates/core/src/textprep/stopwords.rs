use std::collections::HashSet;
use std::path::Path;

use super::tokenize::TokenSeq;
use crate::{Error, Result};

/// Environment variable naming an alternative stopword file.
pub const STOPWORDS_ENV: &str = "EVALKIT_STOPWORDS";

const DEFAULT_STOPWORDS: &str = "\
# articles and fillers common in shellcode intents
a
an
the
each
onto
of
to
into
then
that
this
with
its
it
is
be
please
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl Default for StopwordList {
    fn default() -> Self {
        StopwordList::parse(DEFAULT_STOPWORDS)
    }
}

impl StopwordList {
    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopwordList { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("stopword file {}: {e}", path.display())))?;
        let list = StopwordList::parse(&text);
        if list.is_empty() {
            return Err(Error::Config(format!(
                "{}: stopword list is empty",
                path.display()
            )));
        }
        Ok(list)
    }

    /// Loads the file named by `EVALKIT_STOPWORDS`, or the built-in list.
    pub fn from_env_or_default() -> Result<Self> {
        match std::env::var_os(STOPWORDS_ENV) {
            Some(path) if !path.is_empty() => StopwordList::load(Path::new(&path)),
            _ => Ok(StopwordList::default()),
        }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn filter_stopwords(seq: &TokenSeq, stop: &StopwordList) -> TokenSeq {
    let kept = seq.iter().filter(|t| !stop.contains(t)).cloned().collect();
    TokenSeq::new(kept, seq.config())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{tokenize, TokenizerConfig};

    fn seq(words: &[&str]) -> TokenSeq {
        tokenize(&words.join(" "), TokenizerConfig::INTENT)
    }

    #[test]
    fn removes_listed_words_in_order() {
        let stop = StopwordList::from_words(["the", "to"]);
        let out = filter_stopwords(&seq(&["jump", "to", "the", "label"]), &stop);
        assert_eq!(out.tokens(), ["jump", "label"]);
        assert_eq!(filter_stopwords(&out, &stop), out);
    }

    #[test]
    fn all_stopwords_gives_empty() {
        let stop = StopwordList::from_words(["the", "to"]);
        assert!(filter_stopwords(&seq(&["the", "to", "THE"]), &stop).is_empty());
    }

    #[test]
    fn case_insensitive_match() {
        let stop = StopwordList::from_words(["The"]);
        let cfg = TokenizerConfig {
            lowercase: false,
            ..TokenizerConfig::INTENT
        };
        let out = filter_stopwords(&tokenize("The EAX the", cfg), &stop);
        assert_eq!(out.tokens(), ["EAX"]);
    }

    #[test]
    fn parse_skips_comments() {
        let list = StopwordList::parse("# header\nthe\n\n  Onto  # trailing\n");
        assert_eq!(list.len(), 2);
        assert!(list.contains("onto"));
        assert!(StopwordList::default().contains("each"));
    }
}
