use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Token emitted for a line break when `newline_is_token` is set.
pub const NEWLINE_TOKEN: &str = "\n";

/// Written form of a line break in single-line snippet dumps (` \n `).
const ESCAPED_NEWLINE: &str = "\\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    Whitespace,
    CodePunct,
    Char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    #[serde(default)]
    pub newline_is_token: bool,
    #[serde(default)]
    pub lowercase: bool,
}

impl TokenizerConfig {
    /// Default for code snippets: whitespace split, line breaks as tokens, case kept.
    pub const CODE: TokenizerConfig = TokenizerConfig {
        mode: TokenizerMode::Whitespace,
        newline_is_token: true,
        lowercase: false,
    };

    /// Default for natural-language intents.
    pub const INTENT: TokenizerConfig = TokenizerConfig {
        mode: TokenizerMode::Whitespace,
        newline_is_token: false,
        lowercase: true,
    };

    /// Punctuation-splitting code tokenizer, used for unigram alignment.
    pub const CODE_PUNCT: TokenizerConfig = TokenizerConfig {
        mode: TokenizerMode::CodePunct,
        newline_is_token: true,
        lowercase: false,
    };
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig::CODE
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
    config: TokenizerConfig,
}

impl TokenSeq {
    pub fn new(tokens: Vec<String>, config: TokenizerConfig) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        TokenSeq { tokens, config }
    }

    pub fn config(&self) -> TokenizerConfig {
        self.config
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = match self.config.mode {
            TokenizerMode::Char => "",
            _ => " ",
        };
        f.write_str(&self.tokens.join(sep))
    }
}

// Longest first; matching is greedy.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "**", "//", "<<", ">>", "->", "&&", "||", "::", ":=",
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn split_code_punct(chunk: &str, out: &mut Vec<String>) {
    let mut rest = chunk;
    while let Some(c) = rest.chars().next() {
        let len = if is_word_char(c) {
            rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len())
        } else {
            OPERATORS
                .iter()
                .find(|op| rest.starts_with(*op))
                .map_or(c.len_utf8(), |op| op.len())
        };
        out.push(rest[..len].to_string());
        rest = &rest[len..];
    }
}

pub fn tokenize(text: &str, cfg: TokenizerConfig) -> TokenSeq {
    let mut tokens = Vec::new();
    if cfg.mode == TokenizerMode::Char {
        tokens.extend(text.chars().map(String::from));
    } else {
        for (i, line) in text.split('\n').enumerate() {
            if i > 0 && cfg.newline_is_token {
                tokens.push(NEWLINE_TOKEN.to_string());
            }
            for chunk in line.split_whitespace() {
                if chunk == ESCAPED_NEWLINE {
                    if cfg.newline_is_token {
                        tokens.push(NEWLINE_TOKEN.to_string());
                    }
                    continue;
                }
                match cfg.mode {
                    TokenizerMode::CodePunct => split_code_punct(chunk, &mut tokens),
                    _ => tokens.push(chunk.to_string()),
                }
            }
        }
    }
    if cfg.lowercase {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    TokenSeq::new(tokens, cfg)
}
