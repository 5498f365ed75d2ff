use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeteorParams {
    /// Weight of precision in the parameterized harmonic mean.
    pub alpha: f64,
    /// Exponent of the fragmentation ratio.
    pub beta: f64,
    /// Maximum penalty.
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

impl MeteorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha < 1.0
            && self.beta > 0.0
            && self.beta.is_finite()
            && (0.0..1.0).contains(&self.gamma);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "METEOR parameters out of range: alpha={} beta={} gamma={}",
                self.alpha, self.beta, self.gamma
            )))
        }
    }
}

/// Node budget for the exact chunk minimization; past it the best alignment
/// found so far is kept.
const SEARCH_BUDGET: usize = 200_000;

struct Search<'a> {
    pred: &'a [usize],
    /// Reference positions of each word id, ascending.
    positions: &'a [Vec<usize>],
    used: Vec<bool>,
    /// Remaining (unprocessed) prediction occurrences per word.
    pred_left: Vec<usize>,
    /// Unused reference occurrences per word.
    ref_left: Vec<usize>,
    /// Matches still achievable from the current node.
    reachable: usize,
    target: usize,
    best: usize,
    nodes: usize,
}

impl Search<'_> {
    fn reach(&self, w: usize) -> usize {
        self.pred_left[w].min(self.ref_left[w])
    }

    fn run(&mut self, i: usize, prev: Option<usize>, matched: usize, chunks: usize) {
        self.nodes += 1;
        if chunks >= self.best || matched + self.reachable < self.target {
            return;
        }
        if matched == self.target {
            self.best = chunks;
            return;
        }
        if i == self.pred.len() || self.nodes > SEARCH_BUDGET {
            return;
        }
        let w = self.pred[i];
        let before = self.reach(w);
        self.pred_left[w] -= 1;

        // Continuation of the current chunk first, then ascending positions.
        let cont = prev.map(|j| j + 1);
        let candidates = cont
            .filter(|j| self.positions[w].binary_search(j).is_ok())
            .into_iter()
            .chain(
                self.positions[w]
                    .iter()
                    .copied()
                    .filter(|j| Some(*j) != cont),
            );
        let candidates: Vec<usize> = candidates.collect();
        for j in candidates {
            if self.used[j] {
                continue;
            }
            self.used[j] = true;
            self.ref_left[w] -= 1;
            let after = self.reach(w);
            self.reachable = self.reachable - before + after;
            let chunk_inc = usize::from(cont != Some(j));
            self.run(i + 1, Some(j), matched + 1, chunks + chunk_inc);
            self.reachable = self.reachable + before - after;
            self.ref_left[w] += 1;
            self.used[j] = false;
        }

        let after = self.reach(w);
        self.reachable = self.reachable - before + after;
        self.run(i + 1, None, matched, chunks);
        self.reachable = self.reachable + before - after;
        self.pred_left[w] += 1;
    }
}

/// Exact-match unigram alignment: returns `(matches, chunks)` with matches
/// maximal and, among maximal alignments, the fewest chunks.
pub(crate) fn align<T: Eq + Hash>(pred: &[T], reference: &[T]) -> (usize, usize) {
    let mut vocab: HashMap<&T, usize> = HashMap::new();
    let mut id = |t| {
        let next = vocab.len();
        *vocab.entry(t).or_insert(next)
    };
    let ref_ids: Vec<usize> = reference.iter().map(&mut id).collect();
    let pred_ids: Vec<usize> = pred.iter().map(&mut id).collect();
    let v = vocab.len();

    let mut positions = vec![Vec::new(); v];
    for (j, &w) in ref_ids.iter().enumerate() {
        positions[w].push(j);
    }
    let mut pred_left = vec![0; v];
    for &w in &pred_ids {
        pred_left[w] += 1;
    }
    let ref_left: Vec<usize> = positions.iter().map(Vec::len).collect();
    let target: usize = (0..v).map(|w| pred_left[w].min(ref_left[w])).sum();
    if target == 0 {
        return (0, 0);
    }
    let mut search = Search {
        pred: &pred_ids,
        positions: &positions,
        used: vec![false; reference.len()],
        pred_left,
        ref_left,
        reachable: target,
        target,
        best: usize::MAX,
        nodes: 0,
    };
    search.run(0, None, 0, 0);
    debug_assert!(search.best != usize::MAX);
    (target, search.best)
}

/// METEOR restricted to exact unigram matches.
pub fn meteor<T: Eq + Hash>(pred: &[T], reference: &[T], params: &MeteorParams) -> f64 {
    let (m, chunks) = align(pred, reference);
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / pred.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let penalty = params.gamma * (chunks as f64 / m as f64).powf(params.beta);
    (fmean * (1.0 - penalty)).clamp(0.0, 1.0)
}
