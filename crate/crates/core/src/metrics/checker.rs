//! Compilation-accuracy checkers: shallow builtin line grammars and an
//! external-command plugin.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::corpus::Language;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckerKind {
    BuiltinAssembly,
    BuiltinPythonLike,
    /// Command template; `{file}` is replaced by the snippet's temp file path.
    External {
        template: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub accepted: bool,
    pub diagnostic: Option<String>,
}

impl CheckOutcome {
    fn accept() -> Self {
        CheckOutcome {
            accepted: true,
            diagnostic: None,
        }
    }

    fn reject(why: impl Into<String>) -> Self {
        CheckOutcome {
            accepted: false,
            diagnostic: Some(why.into()),
        }
    }
}

/// Counting semaphore bounding concurrent checker processes.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(self: &Arc<Self>) -> SlotGuard {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        SlotGuard(Arc::clone(self))
    }
}

struct SlotGuard(Arc<Slots>);

impl Drop for SlotGuard {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone)]
pub struct SyntaxChecker {
    pub name: String,
    pub kind: CheckerKind,
    pub timeout: Duration,
    slots: Arc<Slots>,
}

impl PartialEq for SyntaxChecker {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.timeout == other.timeout
    }
}

impl SyntaxChecker {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

    pub fn new(name: &str, kind: CheckerKind, timeout: Duration) -> Self {
        SyntaxChecker {
            name: name.to_string(),
            kind,
            timeout,
            slots: Arc::new(Slots {
                free: Mutex::new(4),
                cv: Condvar::new(),
            }),
        }
    }

    pub fn builtin_assembly() -> Self {
        SyntaxChecker::new(
            "builtin-assembly",
            CheckerKind::BuiltinAssembly,
            Self::DEFAULT_TIMEOUT,
        )
    }

    pub fn builtin_python_like() -> Self {
        SyntaxChecker::new(
            "builtin-python-like",
            CheckerKind::BuiltinPythonLike,
            Self::DEFAULT_TIMEOUT,
        )
    }

    pub fn external(template: &str, timeout: Duration) -> Self {
        SyntaxChecker::new(
            template.split_whitespace().next().unwrap_or("external"),
            CheckerKind::External {
                template: template.to_string(),
            },
            timeout,
        )
    }

    /// Caps simultaneous external processes spawned through this checker and its clones.
    pub fn with_concurrency(mut self, max: usize) -> Self {
        self.slots = Arc::new(Slots {
            free: Mutex::new(max.max(1)),
            cv: Condvar::new(),
        });
        self
    }

    pub fn check(&self, snippet: &str) -> Result<CheckOutcome> {
        match &self.kind {
            CheckerKind::BuiltinAssembly => Ok(check_assembly(snippet)),
            CheckerKind::BuiltinPythonLike => Ok(check_python_like(snippet)),
            CheckerKind::External { template } => {
                let _slot = self.slots.acquire();
                run_external(template, snippet, self.timeout)
            }
        }
    }
}

/// 1 if the checker accepts the snippet, else 0.
pub fn compilation_accuracy(pred: &str, checker: &SyntaxChecker) -> Result<f64> {
    Ok(if checker.check(pred)?.accepted {
        1.0
    } else {
        0.0
    })
}

/// Checker selection per language.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckerSet {
    /// CA is not computed.
    Disabled,
    /// Builtin grammar for assembly and python-like samples.
    Builtin,
    ByLanguage(BTreeMap<Language, SyntaxChecker>),
}

impl CheckerSet {
    pub fn is_disabled(&self) -> bool {
        matches!(self, CheckerSet::Disabled)
    }

    pub fn checker_for(&self, language: Language) -> Result<SyntaxChecker> {
        match self {
            CheckerSet::Disabled => Err(Error::Config("compilation accuracy is disabled".into())),
            CheckerSet::Builtin => match language {
                Language::Assembly => Ok(SyntaxChecker::builtin_assembly()),
                Language::PythonLike => Ok(SyntaxChecker::builtin_python_like()),
                Language::Other => Err(Error::Config(
                    "no builtin checker for language `other`; configure an external checker".into(),
                )),
            },
            CheckerSet::ByLanguage(map) => map.get(&language).cloned().ok_or_else(|| {
                Error::Config(format!("no checker configured for language `{language}`"))
            }),
        }
    }

    pub fn check(&self, language: Language, snippet: &str) -> Result<CheckOutcome> {
        match (self, language) {
            (CheckerSet::Builtin, Language::Assembly) => Ok(check_assembly(snippet)),
            (CheckerSet::Builtin, Language::PythonLike) => Ok(check_python_like(snippet)),
            (CheckerSet::ByLanguage(map), _) if map.contains_key(&language) => {
                map[&language].check(snippet)
            }
            _ => self.checker_for(language)?.check(snippet),
        }
    }
}

fn run_external(template: &str, snippet: &str, timeout: Duration) -> Result<CheckOutcome> {
    let sandbox = tempfile::tempdir().map_err(|e| Error::Sandbox(e.to_string()))?;
    let path = sandbox.path().join("snippet");
    std::fs::File::create(&path)
        .and_then(|mut f| f.write_all(snippet.as_bytes()))
        .map_err(|e| Error::Sandbox(e.to_string()))?;
    let file = path.to_string_lossy();
    let mut argv = template
        .split_whitespace()
        .map(|a| a.replace("{file}", &file));
    let program = argv
        .next()
        .ok_or_else(|| Error::Config("empty checker command".into()))?;

    let mut cmd = Command::new(&program);
    cmd.args(argv)
        .current_dir(sandbox.path())
        .env_clear()
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped());
    if let Some(p) = std::env::var_os("PATH") {
        cmd.env("PATH", p);
    }
    let mut child = cmd.spawn().map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::CheckerNotFound(program.clone()),
        _ => Error::Sandbox(format!("{program}: {e}")),
    })?;

    let mut stderr = child.stderr.take().expect("stderr piped");
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let start = Instant::now();
    let status = loop {
        match child
            .try_wait()
            .map_err(|e| Error::Sandbox(e.to_string()))?
        {
            Some(status) => break Some(status),
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    };
    let diag = reader.join().unwrap_or_default();
    Ok(match status {
        Some(s) if s.success() => CheckOutcome {
            accepted: true,
            diagnostic: (!diag.is_empty()).then_some(diag),
        },
        Some(s) => CheckOutcome::reject(format!("{program} exited with {s}: {diag}")),
        None => CheckOutcome::reject(format!("{program} timed out after {timeout:?}")),
    })
}

/// Splits on `sep` outside brackets and quotes; `None` if unbalanced.
fn split_top_level(s: &str, sep: char) -> Option<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'' | '`') => quote = Some(c),
            (None, '[' | '(') => depth += 1,
            (None, ']' | ')') => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            (None, c) if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 || quote.is_some() {
        return None;
    }
    parts.push(&s[start..]);
    Some(parts)
}

const SIZE_WORDS: &[&str] = &[
    "byte", "word", "dword", "qword", "tword", "oword", "ptr", "short", "near", "far", "strict",
];

fn is_ident(s: &str, extra: &[char]) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || extra.contains(&c))
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || extra.contains(&c))
}

fn assembly_line(line: &str) -> std::result::Result<(), String> {
    let code = match split_top_level(line, ';') {
        Some(parts) => parts[0],
        None => return Err("unbalanced brackets or quotes".into()),
    };
    let mut rest = code.trim();
    if let Some((label, after)) = rest.split_once(':') {
        if is_ident(label.trim(), &['.', '$', '?', '@']) && !label.trim().contains(' ') {
            rest = after.trim();
        }
    }
    if rest.is_empty() {
        return Ok(());
    }
    let (opcode, operands) = rest
        .split_once(char::is_whitespace)
        .map_or((rest, ""), |(o, r)| (o, r.trim()));
    if !is_ident(opcode, &['.']) {
        return Err(format!("bad opcode {opcode:?}"));
    }
    if operands.is_empty() {
        return Ok(());
    }
    let ops = split_top_level(operands, ',').ok_or("unbalanced operand")?;
    for op in ops {
        let words: Vec<&str> = op.split_whitespace().collect();
        let Some((last, prefix)) = words.split_last() else {
            return Err("missing operand".into());
        };
        // Spaces at top level are only legal after size/distance keywords
        // or inside a bracketed/quoted operand.
        let bracketed = last.ends_with(']') || last.ends_with('"') || last.ends_with('\'');
        if !bracketed
            && !prefix
                .iter()
                .all(|w| SIZE_WORDS.contains(&w.to_ascii_lowercase().as_str()))
        {
            return Err(format!("malformed operand {:?}", op.trim()));
        }
    }
    Ok(())
}

fn check_assembly(snippet: &str) -> CheckOutcome {
    if snippet.trim().is_empty() {
        return CheckOutcome::reject("empty snippet");
    }
    for (n, line) in snippet.split('\n').enumerate() {
        if let Err(why) = assembly_line(line) {
            return CheckOutcome::reject(format!("line {}: {why}", n + 1));
        }
    }
    CheckOutcome::accept()
}

const COMPOUND_HEADS: &[&str] = &[
    "if", "elif", "else", "for", "while", "def", "class", "try", "except", "finally", "with",
    "async",
];
const COLON_HEADS: &[&str] = &["match", "case", "lambda"];
const DANGLING: &[&str] = &[
    "+", "-", "*", "/", "%", "=", "==", "!=", "<", ">", "<=", ">=", "and", "or", "not", "in", "is",
    ".", "**", "//", "&", "|", "^", "+=", "-=",
];

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "case", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "match", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with",
    "yield",
];

/// Finds two operands separated only by whitespace, such as `mov eax`.
fn juxtaposed_operands(code: &str) -> Option<(String, String)> {
    let is_word = |c: char| c.is_alphanumeric() || c == '_' || c == '.';
    let mut prev: Option<String> = None;
    let mut chars = code.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if is_word(c) {
            let mut end = start + c.len_utf8();
            while let Some(&(i, d)) = chars.peek() {
                if !is_word(d) {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
            let word = &code[start..end];
            if KEYWORDS.contains(&word) {
                prev = None;
                continue;
            }
            if let Some(p) = prev {
                return Some((p, word.to_string()));
            }
            prev = Some(word.to_string());
        } else if matches!(c, ')' | ']' | '}') {
            prev = Some(c.to_string());
        } else if !c.is_whitespace() {
            prev = None;
        }
    }
    None
}

fn check_python_like(snippet: &str) -> CheckOutcome {
    if snippet.trim().is_empty() {
        return CheckOutcome::reject("empty snippet");
    }
    let mut stack: Vec<char> = Vec::new();
    for (n, raw) in snippet.split('\n').enumerate() {
        let starts_at_top = stack.is_empty();
        // Strip comment and strings, tracking brackets.
        let mut code = String::new();
        let mut quote: Option<char> = None;
        let mut escaped = false;
        for c in raw.chars() {
            if let Some(q) = quote {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                    code.push('s');
                }
                continue;
            }
            match c {
                '#' => break,
                '"' | '\'' => quote = Some(c),
                '(' | '[' | '{' => {
                    stack.push(c);
                    code.push(c);
                }
                ')' | ']' | '}' => {
                    let open = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    if stack.pop() != Some(open) {
                        return CheckOutcome::reject(format!("line {}: unmatched {c:?}", n + 1));
                    }
                    code.push(c);
                }
                _ => code.push(c),
            }
        }
        if quote.is_some() {
            return CheckOutcome::reject(format!("line {}: unterminated string", n + 1));
        }
        let code = code.trim();
        if let Some((a, b)) = juxtaposed_operands(code) {
            return CheckOutcome::reject(format!("line {}: `{a}` followed by `{b}`", n + 1));
        }
        if !starts_at_top || code.is_empty() || !stack.is_empty() {
            continue;
        }
        if code.ends_with('\\') {
            return CheckOutcome::reject(format!("line {}: dangling continuation", n + 1));
        }
        let head = code
            .split(|c: char| !(c.is_alphanumeric() || c == '_'))
            .next()
            .unwrap_or("");
        let has_colon = code.contains(':');
        if COMPOUND_HEADS.contains(&head) && !has_colon {
            return CheckOutcome::reject(format!("line {}: `{head}` statement without ':'", n + 1));
        }
        if code.ends_with(':') && !COMPOUND_HEADS.contains(&head) && !COLON_HEADS.contains(&head) {
            return CheckOutcome::reject(format!("line {}: unexpected ':'", n + 1));
        }
        let last = code.split_whitespace().last().unwrap_or("");
        if DANGLING.contains(&last) || code.ends_with('.') || code.ends_with('=') {
            return CheckOutcome::reject(format!("line {}: incomplete expression", n + 1));
        }
    }
    if let Some(open) = stack.last() {
        return CheckOutcome::reject(format!("unclosed {open:?}"));
    }
    CheckOutcome::accept()
}
