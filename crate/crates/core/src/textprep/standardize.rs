use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Named pattern whose matches are replaced by placeholders.
#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub regex: Regex,
}

impl Rule {
    pub fn new(name: &str, pattern: &str) -> Result<Self> {
        let regex = Regex::new(pattern).map_err(|source| Error::InvalidRegex {
            name: name.to_string(),
            source,
        })?;
        Ok(Rule {
            name: name.to_string(),
            regex,
        })
    }
}

const BUILTINS: &[(&str, &str)] = &[
    ("quoted", r#""[^"\n]*"|'[^'\n]*'"#),
    ("hex", r"\b0[xX][0-9A-Fa-f]+\b"),
    ("decimal", r"\b[0-9]+\b"),
    (
        "register",
        r"(?i)\b(?:[re]?[abcd]x|[abcd][hl]|[re]?(?:si|di|sp|bp|ip)|r(?:[89]|1[0-5])[dwb]?)\b",
    ),
];

fn builtin_pattern(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

/// Built-in literal rules in priority order: quoted string, hex, decimal.
///
/// The register rule is available by name (`builtin:register`) but not
/// enabled by default, since register names usually carry meaning in intents.
pub fn builtin_rules() -> Vec<Rule> {
    ["quoted", "hex", "decimal"]
        .iter()
        .map(|n| Rule::new(n, builtin_pattern(n).unwrap()).expect("builtin regex compiles"))
        .collect()
}

/// Parses `name = pattern` lines; `pattern` may be `builtin:<name>`.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, pattern) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("rules line {}: expected `name = regex`", idx + 1))
        })?;
        let (name, pattern) = (name.trim(), pattern.trim());
        if name.is_empty() {
            return Err(Error::Config(format!(
                "rules line {}: empty rule name",
                idx + 1
            )));
        }
        let pattern = match pattern.strip_prefix("builtin:") {
            Some(b) => builtin_pattern(b.trim())
                .ok_or_else(|| Error::Config(format!("unknown builtin rule {b:?}")))?,
            None => pattern,
        };
        rules.push(Rule::new(name, pattern)?);
    }
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<Rule>> {
    // A rules file is configuration: a missing one is a config error.
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("rules file {}: {e}", path.display())))?;
    parse_rules(&text)
}

/// Ordered `var#` ↔ literal pairs for one intent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StandardizationMap {
    entries: Vec<(String, String)>,
}

impl StandardizationMap {
    pub fn placeholder(index: usize) -> String {
        format!("var{index}")
    }

    fn push(&mut self, literal: &str) -> String {
        let p = Self::placeholder(self.entries.len());
        self.entries.push((p.clone(), literal.to_string()));
        p
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, placeholder: &str) -> Option<&str> {
        let index: usize = placeholder.strip_prefix("var")?.parse().ok()?;
        self.entries
            .get(index)
            .filter(|(p, _)| p == placeholder)
            .map(|(_, l)| l.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks density (var0..varN-1 in order) and nonempty literals.
    pub fn validate(&self) -> Result<()> {
        for (i, (p, l)) in self.entries.iter().enumerate() {
            if *p != Self::placeholder(i) || l.is_empty() {
                return Err(Error::Config(format!(
                    "malformed standardization entry {p}={l:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Replaces rule matches left to right with `var0`, `var1`, ...
///
/// At each position the earliest match wins; among matches starting at the
/// same offset the rule listed first wins.
pub fn standardize(intent: &str, rules: &[Rule]) -> (String, StandardizationMap) {
    let mut map = StandardizationMap::default();
    let mut out = String::with_capacity(intent.len());
    let mut pos = 0;
    while pos < intent.len() {
        let best = rules
            .iter()
            .filter_map(|r| {
                // Skip empty matches; they would never advance.
                let mut at = pos;
                loop {
                    let m = r.regex.find_at(intent, at)?;
                    if !m.is_empty() {
                        return Some(m);
                    }
                    at = m.end() + intent[m.end()..].chars().next()?.len_utf8();
                }
            })
            .min_by_key(|m| m.start());
        let Some(m) = best else { break };
        out.push_str(&intent[pos..m.start()]);
        out.push_str(&map.push(m.as_str()));
        pos = m.end();
    }
    out.push_str(&intent[pos..]);
    (out, map)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destandardized {
    pub text: String,
    /// Placeholders found in the snippet with no entry in the map.
    pub unknown: Vec<String>,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"var[0-9]+").unwrap());

pub fn destandardize(snippet: &str, map: &StandardizationMap) -> Destandardized {
    let mut unknown = Vec::new();
    let text = PLACEHOLDER
        .replace_all(snippet, |caps: &regex::Captures<'_>| {
            let p = &caps[0];
            match map.get(p) {
                Some(literal) => literal.to_string(),
                None => {
                    if !unknown.iter().any(|u| u == p) {
                        unknown.push(p.to_string());
                    }
                    p.to_string()
                }
            }
        })
        .into_owned();
    if !unknown.is_empty() {
        log::warn!("unresolved placeholders: {}", unknown.join(", "));
    }
    Destandardized { text, unknown }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decimal() -> Vec<Rule> {
        vec![Rule::new("decimal", r"\b[0-9]+\b").unwrap()]
    }

    #[test]
    fn numeric_literal() {
        let (s, map) = standardize("move 5 in the lowest byte", &decimal());
        assert_eq!(s, "move var0 in the lowest byte");
        assert_eq!(map.entries(), [("var0".to_string(), "5".to_string())]);
    }

    #[test]
    fn no_match_is_noop() {
        let (s, map) = standardize("compare s1 with s2", &decimal());
        assert_eq!(s, "compare s1 with s2");
        assert!(map.is_empty());
    }

    #[test]
    fn hex_literals_in_textual_order() {
        let intent = "push 0x68732f2f then push 0x6e69622f";
        let (s, map) = standardize(intent, &builtin_rules());
        assert_eq!(s, "push var0 then push var1");
        // Oracle: plain regex scan positions.
        let found: Vec<&str> = Regex::new(r"0x[0-9a-f]+")
            .unwrap()
            .find_iter(intent)
            .map(|m| m.as_str())
            .collect();
        let literals: Vec<&str> = map.entries().iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(literals, found);
    }

    #[test]
    fn first_rule_wins_at_same_offset() {
        let rules = vec![
            Rule::new("word", r"[a-z]+").unwrap(),
            Rule::new("short", r"[a-z]").unwrap(),
        ];
        let (s, map) = standardize("ab cd", &rules);
        assert_eq!(s, "var0 var1");
        assert_eq!(map.get("var0"), Some("ab"));
    }

    #[test]
    fn quoted_string_beats_inner_number() {
        let (s, map) = standardize(r#"print "id 42" then 7"#, &builtin_rules());
        assert_eq!(s, "print var0 then var1");
        assert_eq!(map.get("var0"), Some("\"id 42\""));
        assert_eq!(map.get("var1"), Some("7"));
    }

    #[test]
    fn destandardize_basic_and_unknown() {
        let (_, map) = standardize("move 5", &decimal());
        assert_eq!(destandardize("mov eax, var0", &map).text, "mov eax, 5");
        assert_eq!(destandardize("nop", &map).text, "nop");
        let d = destandardize("mov var0, var3", &map);
        assert_eq!(d.text, "mov 5, var3");
        assert_eq!(d.unknown, ["var3"]);
    }

    #[test]
    fn var10_not_confused_with_var1() {
        let text: Vec<String> = (0..12).map(|i| format!("{i}")).collect();
        let (s, map) = standardize(&text.join(" "), &decimal());
        assert_eq!(destandardize(&s, &map).text, text.join(" "));
        map.validate().unwrap();
    }

    #[test]
    fn rules_file_parsing() {
        let rules = parse_rules("# comment\nhex = builtin:hex\nlabel = _[a-z]+\n").unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[1].name, "label");
        assert!(matches!(
            parse_rules("bad = ("),
            Err(Error::InvalidRegex { .. })
        ));
        assert!(parse_rules("nonsense").is_err());
        assert!(parse_rules("x = builtin:nope").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(words in proptest::collection::vec(
            prop_oneof![
                "[a-uw-z]{1,6}",
                "[0-9]{1,4}",
                "0x[0-9a-f]{1,8}",
                "\"[a-z ]{0,5}\"",
            ], 0..12)) {
            let intent = words.join(" ");
            let (s, map) = standardize(&intent, &builtin_rules());
            prop_assert!(map.validate().is_ok());
            // Dense placeholders in order of appearance.
            let seen: Vec<String> = PLACEHOLDER.find_iter(&s).map(|m| m.as_str().to_string()).collect();
            let expected: Vec<String> = (0..map.len()).map(StandardizationMap::placeholder).collect();
            prop_assert_eq!(seen, expected);
            let back = destandardize(&s, &map);
            prop_assert!(back.unknown.is_empty());
            prop_assert_eq!(back.text, intent);
        }
    }
}
