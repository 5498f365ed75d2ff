use std::hash::Hash;

use super::ngram::overlap;
use crate::Result;

/// Precision, recall and F1 of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Any zero denominator yields 0 for that component.
    pub fn from_counts(matches: usize, pred_total: usize, ref_total: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(matches, pred_total);
        let recall = ratio(matches, ref_total);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

pub fn rouge_n<T: Eq + Hash>(pred: &[T], reference: &[T], n: usize) -> Result<Prf> {
    let matches = overlap(pred, reference, n)?;
    let count = |len: usize| (len + 1).saturating_sub(n);
    Ok(Prf::from_counts(
        matches,
        count(pred.len()),
        count(reference.len()),
    ))
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_length<T: Eq>(a: &[T], b: &[T]) -> usize {
    super::with_scratch_row(b.len() + 1, |row| {
        row.fill(0);
        for x in a {
            let (mut diag, mut left) = (0, 0);
            for (cell, y) in row[1..].iter_mut().zip(b) {
                let up = *cell;
                // Equivalent to the usual branch on x == y, but branch-free.
                left = (diag + usize::from(x == y)).max(up).max(left);
                *cell = left;
                diag = up;
            }
        }
        row[b.len()]
    })
}

pub fn rouge_l<T: Eq>(pred: &[T], reference: &[T]) -> Prf {
    Prf::from_counts(lcs_length(pred, reference), pred.len(), reference.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{tokenize, TokenizerConfig};

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, TokenizerConfig::CODE).into_tokens()
    }

    #[test]
    fn identity() {
        let a = toks("mov eax, ebx");
        let prf = rouge_n(&a, &a, 2).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        assert_eq!(rouge_l(&a, &a).f1, 1.0);
    }

    #[test]
    fn one_token_substitution() {
        let p = toks("if count % 2 == 0:");
        let r = toks("if count % 2 != 0:");
        let prf = rouge_n(&p, &r, 1).unwrap();
        assert_eq!(prf.precision, 5.0 / 6.0);
        assert_eq!(prf.recall, 5.0 / 6.0);
        assert!((prf.f1 - 5.0 / 6.0).abs() < 1e-15);
        assert!((rouge_l(&p, &r).f1 - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn short_sequences_score_zero() {
        let p = toks("jmp decode");
        assert_eq!(rouge_n(&p, &p, 4).unwrap(), Prf::default());
        let empty: Vec<String> = vec![];
        assert_eq!(rouge_l(&empty, &p), Prf::default());
    }

    #[test]
    fn push_pop_rouge_l() {
        let r = toks("mov EDX, EAX");
        let p = toks("push EAX\npop EDX");
        assert_eq!(lcs_length(&p, &r), 1);
        assert!((rouge_l(&p, &r).f1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lcs_basics() {
        assert_eq!(lcs_length(b"abcbdab", b"bdcaba"), 4);
        assert_eq!(lcs_length(b"abc", b"xyz"), 0);
        assert_eq!(lcs_length(b"abc", b""), 0);
    }
}
