//! Text preparation: tokenization, stopword filtering, and intent
//! standardization with `var#` placeholders.

mod standardize;
mod stopwords;
mod tokenize;

pub use standardize::{
    builtin_rules, destandardize, load_rules, parse_rules, standardize, Destandardized, Rule,
    StandardizationMap,
};
pub use stopwords::{filter_stopwords, StopwordList, STOPWORDS_ENV};
pub use tokenize::{tokenize, TokenSeq, TokenizerConfig, TokenizerMode, NEWLINE_TOKEN};
