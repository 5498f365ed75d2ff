use serde::{Deserialize, Serialize};

/// Rendering of line breaks before character-level comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineBreak {
    /// Lines joined by ` \n ` (backslash-n), the single-line dump form.
    Escaped,
    /// Newline characters compared as-is.
    Raw,
}

pub fn flatten_lines(text: &str, mode: LineBreak) -> String {
    match mode {
        LineBreak::Raw => text.to_string(),
        LineBreak::Escaped => text.split('\n').collect::<Vec<_>>().join(" \\n "),
    }
}

/// Levenshtein distance with unit costs.
pub fn levenshtein<T: Eq>(a: &[T], b: &[T]) -> usize {
    super::with_scratch_row(b.len() + 1, |row| {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = j;
        }
        for (i, x) in a.iter().enumerate() {
            let mut diag = row[0];
            let mut left = i + 1;
            row[0] = left;
            for (cell, y) in row[1..].iter_mut().zip(b) {
                let up = *cell;
                left = (diag + usize::from(x != y)).min(up + 1).min(left + 1);
                *cell = left;
                diag = up;
            }
        }
        row[b.len()]
    })
}

/// `1 - levenshtein / max(len)` over Unicode scalar values.
pub fn edit_distance_norm(pred: &str, reference: &str) -> f64 {
    let p: Vec<char> = pred.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    let longest = p.len().max(r.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&p, &r) as f64 / longest as f64
}
