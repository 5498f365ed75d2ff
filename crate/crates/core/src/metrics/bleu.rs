use std::fmt;
use std::hash::Hash;

use super::ngram::overlap;

/// Treatment of zero modified precisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Any zero precision makes the score 0.
    None,
    /// Zero precisions are replaced by the given floor.
    Epsilon(f64),
}

impl Smoothing {
    pub const DEFAULT_EPSILON: f64 = 0.1;
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::None => f.write_str("none"),
            Smoothing::Epsilon(e) => write!(f, "epsilon({e})"),
        }
    }
}

/// Sentence-level BLEU with uniform weights over orders 1..=`max_n`.
///
/// Precisions are clipped by reference counts; an order with no candidate
/// n-grams has precision 0.
pub fn bleu<T: Eq + Hash>(pred: &[T], reference: &[T], max_n: usize, smoothing: Smoothing) -> f64 {
    assert!(
        (1..=4).contains(&max_n),
        "BLEU order must be in 1..=4, got {max_n}"
    );
    if pred.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let total = (pred.len() + 1).saturating_sub(n);
        let clipped = overlap(pred, reference, n).expect("n >= 1");
        let p = if total == 0 {
            0.0
        } else {
            clipped as f64 / total as f64
        };
        let p = match smoothing {
            _ if p > 0.0 => p,
            Smoothing::None => return 0.0,
            Smoothing::Epsilon(eps) => eps,
        };
        log_sum += p.ln();
    }
    let bp = if pred.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / pred.len() as f64).exp()
    };
    (bp * (log_sum / max_n as f64).exp()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{tokenize, TokenizerConfig};

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, TokenizerConfig::CODE).into_tokens()
    }

    #[test]
    fn identity_is_one() {
        let a = toks("for byte in encoder:");
        for n in 1..=4 {
            assert_eq!(bleu(&a, &a, n, Smoothing::None), 1.0);
        }
    }

    #[test]
    fn disjoint_is_zero() {
        let a = toks("push eax");
        let b = toks("pop ebx");
        assert_eq!(bleu(&a, &b, 1, Smoothing::None), 0.0);
        assert_eq!(bleu(&a, &b, 4, Smoothing::None), 0.0);
    }

    #[test]
    fn brevity_penalty() {
        let r = toks("a b c d");
        let p = toks("a b");
        let expected = (1.0f64 - 2.0).exp();
        assert!((bleu(&p, &r, 1, Smoothing::None) - expected).abs() < 1e-15);
    }

    #[test]
    fn epsilon_floor() {
        let r = toks("mov EDX, EAX");
        let p = toks("push EAX\npop EDX");
        // p1 = 1/5, higher orders floored at 0.1
        let expected = (0.2f64.ln() / 4.0 + 3.0 * 0.1f64.ln() / 4.0).exp();
        let got = bleu(&p, &r, 4, Smoothing::Epsilon(0.1));
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(bleu(&p, &r, 4, Smoothing::None), 0.0);
    }

    #[test]
    fn empty_prediction() {
        let r = toks("a b");
        assert_eq!(bleu::<String>(&[], &r, 2, Smoothing::Epsilon(0.1)), 0.0);
    }
}
