use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Contiguous windows of length `n`, in order.
pub fn ngrams<T>(seq: &[T], n: usize) -> Result<Vec<&[T]>> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    Ok(seq.windows(n).collect())
}

/// Multiset of n-grams as window → multiplicity.
pub fn ngram_counts<T: Eq + Hash>(seq: &[T], n: usize) -> Result<HashMap<&[T], usize>> {
    let mut counts = HashMap::new();
    for w in ngrams(seq, n)? {
        *counts.entry(w).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Size of the multiset intersection of the n-grams of `a` and `b`.
pub(crate) fn overlap<T: Eq + Hash>(a: &[T], b: &[T], n: usize) -> Result<usize> {
    let ca = ngram_counts(a, n)?;
    let cb = ngram_counts(b, n)?;
    let (small, large) = if ca.len() <= cb.len() {
        (&ca, &cb)
    } else {
        (&cb, &ca)
    };
    Ok(small
        .iter()
        .map(|(g, c)| (*c).min(large.get(g).copied().unwrap_or(0)))
        .sum())
}
