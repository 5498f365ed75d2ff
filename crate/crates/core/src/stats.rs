//! Agreement between automatic metrics and human semantic-correctness labels:
//! per-partition offsets, descriptive statistics and Pearson / Kendall tau-b
//! correlation.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{Corpus, ResultTable, Sc};
use crate::metrics::{MetricId, MetricVector};
use crate::parallel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartitionKind {
    Whole,
    Correct,
    Wrong,
}

impl PartitionKind {
    pub const ALL: [PartitionKind; 3] = [
        PartitionKind::Whole,
        PartitionKind::Correct,
        PartitionKind::Wrong,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Whole => "whole",
            PartitionKind::Correct => "correct",
            PartitionKind::Wrong => "wrong",
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PartitionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PartitionKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| format!("unknown partition {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub kind: PartitionKind,
    /// Sample ids in corpus order.
    pub ids: Vec<String>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitions {
    pub whole: Partition,
    pub correct: Partition,
    pub wrong: Partition,
    /// Samples without an SC label; excluded from all three partitions.
    pub unlabeled: usize,
}

impl Partitions {
    pub fn get(&self, kind: PartitionKind) -> &Partition {
        match kind {
            PartitionKind::Whole => &self.whole,
            PartitionKind::Correct => &self.correct,
            PartitionKind::Wrong => &self.wrong,
        }
    }
}

pub fn partition_by_sc(corpus: &Corpus) -> Result<Partitions> {
    let mut whole = Vec::new();
    let mut correct = Vec::new();
    let mut wrong = Vec::new();
    for (s, sc) in corpus.labeled() {
        whole.push(s.id.clone());
        match sc {
            Sc::Correct => correct.push(s.id.clone()),
            Sc::Wrong => wrong.push(s.id.clone()),
        }
    }
    if whole.is_empty() {
        return Err(Error::NoLabels);
    }
    let unlabeled = corpus.len() - whole.len();
    if unlabeled > 0 {
        log::info!("{unlabeled} unlabeled samples skipped");
    }
    Ok(Partitions {
        whole: Partition {
            kind: PartitionKind::Whole,
            ids: whole,
        },
        correct: Partition {
            kind: PartitionKind::Correct,
            ids: correct,
        },
        wrong: Partition {
            kind: PartitionKind::Wrong,
            ids: wrong,
        },
        unlabeled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetRow {
    pub metric: MetricId,
    pub mean_value: f64,
    /// `|mean_value - mean(SC)|` on the same partition.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTable {
    pub kind: PartitionKind,
    pub n: usize,
    pub sc_mean: f64,
    pub rows: Vec<OffsetRow>,
}

fn lookup<'a>(scores: &BTreeMap<&str, &'a MetricVector>, id: &str) -> Result<&'a MetricVector> {
    scores
        .get(id)
        .copied()
        .ok_or_else(|| Error::MissingScores(id.to_string()))
}

fn sc_of(corpus: &Corpus, id: &str) -> Result<f64> {
    corpus
        .get(id)
        .and_then(|s| s.sc)
        .map(Sc::as_f64)
        .ok_or_else(|| Error::InvalidSample {
            id: id.to_string(),
            message: "not a labeled sample of the corpus".into(),
        })
}

/// Mean of each metric on the partition and its distance to the SC mean.
pub fn offsets(corpus: &Corpus, scores: &ResultTable, part: &Partition) -> Result<OffsetTable> {
    if part.is_empty() {
        return Err(Error::EmptyPartition(part.kind.to_string()));
    }
    let by_id = scores.by_id();
    let n = part.len() as f64;
    let mut sc_sum = 0.0;
    let mut sums = vec![0.0; scores.metrics.len()];
    for id in &part.ids {
        sc_sum += sc_of(corpus, id)?;
        let v = lookup(&by_id, id)?;
        for (sum, m) in sums.iter_mut().zip(&scores.metrics) {
            *sum += v
                .get(*m)
                .ok_or_else(|| Error::MissingScores(format!("{id}/{m}")))?;
        }
    }
    let sc_mean = sc_sum / n;
    let rows = scores
        .metrics
        .iter()
        .zip(sums)
        .map(|(&metric, sum)| {
            let mean_value = sum / n;
            OffsetRow {
                metric,
                mean_value,
                offset: (mean_value - sc_mean).abs(),
            }
        })
        .collect();
    Ok(OffsetTable {
        kind: part.kind,
        n: part.len(),
        sc_mean,
        rows,
    })
}

/// Five-number summary plus mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Quantile by linear interpolation between closest ranks (`(n-1)·q`).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Result<DescriptiveStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(DescriptiveStats {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean,
        std: var.sqrt(),
    })
}

/// Pearson's r; `None` when fewer than two pairs or either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Ok(None);
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

fn tie_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], same: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort by `y`, returning the number of strict inversions.
fn sort_count_swaps(v: &mut [(f64, f64)], buf: &mut Vec<(f64, f64)>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], buf) + sort_count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].1.total_cmp(&v[i].1) == Ordering::Less {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm); `None` when either
/// variable is entirely tied.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len() as u64;
    if n < 2 {
        return Ok(None);
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let eq = |a: f64, b: f64| a.total_cmp(&b) == Ordering::Equal;
    let n0 = n * (n - 1) / 2;
    let tied_x = tie_pairs(&pairs, |a, b| eq(a.0, b.0));
    let tied_xy = tie_pairs(&pairs, |a, b| eq(a.0, b.0) && eq(a.1, b.1));
    let mut buf = Vec::with_capacity(pairs.len());
    let swaps = sort_count_swaps(&mut pairs, &mut buf);
    let tied_y = tie_pairs(&pairs, |a, b| eq(a.1, b.1));

    let (nx, ny) = (n0 - tied_x, n0 - tied_y);
    if nx == 0 || ny == 0 {
        return Ok(None);
    }
    let numerator = n0 as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    Ok(Some(
        (numerator / ((nx as f64) * (ny as f64)).sqrt()).clamp(-1.0, 1.0),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    pub metric: MetricId,
    pub pearson_r: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub n: usize,
}

/// Correlation of each metric's per-sample score with SC over labeled samples.
pub fn correlate(corpus: &Corpus, scores: &ResultTable) -> Result<Vec<CorrelationRow>> {
    let by_id = scores.by_id();
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for (s, sc) in corpus.labeled() {
        labels.push(sc.as_f64());
        vectors.push(lookup(&by_id, &s.id)?);
    }
    if labels.len() < 2 {
        return Err(Error::NoLabels);
    }
    let columns: Vec<(MetricId, Vec<f64>)> = scores
        .metrics
        .iter()
        .map(|&m| {
            let col = vectors
                .iter()
                .zip(corpus.labeled())
                .map(|(v, (s, _))| {
                    v.get(m)
                        .ok_or_else(|| Error::MissingScores(format!("{}/{m}", s.id)))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((m, col))
        })
        .collect::<Result<_>>()?;
    parallel::try_map_ordered(&columns, 0, |(metric, col)| {
        Ok(CorrelationRow {
            metric: *metric,
            pearson_r: pearson(col, &labels)?,
            kendall_tau: kendall_tau(col, &labels)?,
            n: labels.len(),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Language, Sample};
    use proptest::prelude::*;

    /// O(n²) tau-b from the pair-count definition.
    fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let sx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
                let sy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
                match (sx == 0.0, sy == 0.0) {
                    (true, true) => {}
                    (true, false) => tx += 1,
                    (false, true) => ty += 1,
                    _ if sx == sy => c += 1,
                    _ => d += 1,
                }
            }
        }
        let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
        (denom > 0.0).then(|| (c - d) as f64 / denom)
    }

    #[test]
    fn pearson_fixtures() {
        assert_eq!(
            pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(),
            Some(0.8)
        );
        let x = [0.1, 0.5, 0.7, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pearson(&x, &[3.0; 4]).unwrap(), None);
        assert!(matches!(
            pearson(&x, &[1.0]),
            Err(Error::LengthMismatch(4, 1))
        ));
    }

    #[test]
    fn kendall_fixtures() {
        let t = kendall_tau(&[1., 2., 3., 4.], &[1., 3., 2., 4.])
            .unwrap()
            .unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            kendall_tau(&[1., 2., 3.], &[1., 2., 3.]).unwrap(),
            Some(1.0)
        );
        assert_eq!(
            kendall_tau(&[1., 2., 3.], &[3., 2., 1.]).unwrap(),
            Some(-1.0)
        );
        assert_eq!(kendall_tau(&[1., 1., 1.], &[3., 2., 1.]).unwrap(), None);
    }

    #[test]
    fn kendall_with_ties_matches_definition() {
        let x = [0.5, 0.5, 1.0, 0.0, 0.25, 1.0];
        let y = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let fast = kendall_tau(&x, &y).unwrap().unwrap();
        assert!((fast - brute_tau_b(&x, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn describe_fixtures() {
        let one = describe(&[0.5]).unwrap();
        assert_eq!(
            (one.min, one.q1, one.median, one.q3, one.max),
            (0.5, 0.5, 0.5, 0.5, 0.5)
        );
        assert_eq!((one.mean, one.std), (0.5, 0.0));
        let two = describe(&[1.0, 0.0]).unwrap();
        assert_eq!(
            (two.min, two.median, two.max, two.mean),
            (0.0, 0.5, 1.0, 0.5)
        );
        assert_eq!((two.q1, two.q3, two.std), (0.25, 0.75, 0.5));
        assert!(matches!(describe(&[]), Err(Error::EmptyInput)));
    }

    fn labeled_corpus(labels: &[Option<u8>]) -> Corpus {
        Corpus::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| Sample {
                    id: format!("s{i}"),
                    intent: String::new(),
                    reference: String::new(),
                    prediction: String::new(),
                    sc: l.map(|v| if v == 1 { Sc::Correct } else { Sc::Wrong }),
                    language: Language::Other,
                })
                .collect(),
        )
        .unwrap()
    }

    fn table(values: &[(MetricId, &[f64])]) -> ResultTable {
        let n = values[0].1.len();
        let rows = (0..n)
            .map(|i| {
                let v: MetricVector = values.iter().map(|(m, col)| (*m, col[i])).collect();
                (format!("s{i}"), v)
            })
            .collect();
        ResultTable::from_rows(rows).unwrap()
    }

    #[test]
    fn partitions() {
        let p = partition_by_sc(&labeled_corpus(&[Some(1), Some(0), Some(1)])).unwrap();
        assert_eq!(p.correct.ids, ["s0", "s2"]);
        assert_eq!(p.wrong.ids, ["s1"]);
        assert_eq!(p.whole.len(), 3);
        let p = partition_by_sc(&labeled_corpus(&[Some(1), Some(1)])).unwrap();
        assert!(p.wrong.is_empty());
        let p = partition_by_sc(&labeled_corpus(&[Some(1), None, Some(0), None])).unwrap();
        assert_eq!((p.whole.len(), p.unlabeled), (2, 2));
        assert!(matches!(
            partition_by_sc(&labeled_corpus(&[None])),
            Err(Error::NoLabels)
        ));
    }

    #[test]
    fn offsets_hand_arithmetic() {
        // SC = [1, 0, 1, 1]; EM = [1, 0, 0, 1]; ED = [1, .5, .75, .9]
        let corpus = labeled_corpus(&[Some(1), Some(0), Some(1), Some(1)]);
        let scores = table(&[
            (MetricId::Em, &[1.0, 0.0, 0.0, 1.0]),
            (MetricId::Ed, &[1.0, 0.5, 0.75, 0.9]),
        ]);
        let parts = partition_by_sc(&corpus).unwrap();
        let whole = offsets(&corpus, &scores, &parts.whole).unwrap();
        assert_eq!(whole.sc_mean, 0.75);
        assert_eq!(whole.rows[0].mean_value, 0.5);
        assert_eq!(whole.rows[0].offset, 0.25);
        assert!((whole.rows[1].mean_value - 0.7875).abs() < 1e-15);
        assert!((whole.rows[1].offset - 0.0375).abs() < 1e-15);
        let correct = offsets(&corpus, &scores, &parts.correct).unwrap();
        assert!((correct.rows[0].offset - 1.0 / 3.0).abs() < 1e-15);
        assert!((correct.rows[1].mean_value - 2.65 / 3.0).abs() < 1e-15);
        let wrong = offsets(&corpus, &scores, &parts.wrong).unwrap();
        assert_eq!((wrong.rows[0].mean_value, wrong.rows[0].offset), (0.0, 0.0));
        assert_eq!(wrong.rows[1].offset, 0.5);
        let empty = Partition {
            kind: PartitionKind::Wrong,
            ids: vec![],
        };
        assert!(matches!(
            offsets(&corpus, &scores, &empty),
            Err(Error::EmptyPartition(_))
        ));
    }

    #[test]
    fn correlate_hand_corpus() {
        // sc = [1,1,0,0,1,0], ED = [.9,.8,.3,.6,.7,.6], EM = sc, CA constant
        let corpus = labeled_corpus(&[Some(1), Some(1), Some(0), Some(0), Some(1), Some(0)]);
        let scores = table(&[
            (MetricId::Ca, &[1.0; 6]),
            (MetricId::Em, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
            (MetricId::Ed, &[0.9, 0.8, 0.3, 0.6, 0.7, 0.6]),
        ]);
        let rows = correlate(&corpus, &scores).unwrap();
        assert_eq!(rows[0].pearson_r, None);
        assert_eq!(rows[0].kendall_tau, None);
        assert_eq!(rows[1].pearson_r, Some(1.0));
        assert_eq!(rows[1].kendall_tau, Some(1.0));
        // ED: class means 0.8 vs 0.5, population variance 0.215 / 6,
        // point-biserial = (0.8 - 0.5) / std * sqrt(0.5 * 0.5)
        let r = rows[2].pearson_r.unwrap();
        assert!((r - 0.3 / (0.215f64 / 6.0).sqrt() * 0.5).abs() < 1e-12);
        // 9 concordant cross pairs, no discordant; ties: 1 in ED, 6 in SC, 1 joint
        // -> tau-b = 9 / sqrt((15 - 1) * (15 - 6))
        let tau = rows[2].kendall_tau.unwrap();
        assert!((tau - 9.0 / 126.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(rows[2].n, 6);
    }

    proptest! {
        #[test]
        fn kendall_matches_brute_force(pairs in proptest::collection::vec((0u8..5, 0u8..3), 2..40)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 4.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let fast = kendall_tau(&x, &y).unwrap();
            let slow = brute_tau_b(&x, &y);
            match (fast, slow) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn pearson_affine(x in proptest::collection::vec(-10.0f64..10.0, 3..30), a in -5.0f64..5.0, b in -5.0f64..5.0) {
            prop_assume!(a.abs() > 1e-3);
            let spread = x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let r = pearson(&x, &y).unwrap().unwrap();
            prop_assert!((r - a.signum()).abs() < 1e-9);
        }

        #[test]
        fn kendall_negation(x in proptest::collection::hash_set(-1000i32..1000, 2..30), y in proptest::collection::vec(0u8..4, 30)) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y[..x.len()].iter().map(|v| *v as f64).collect();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            match (kendall_tau(&x, &y).unwrap(), kendall_tau(&neg, &y).unwrap()) {
                (Some(a), Some(b)) => prop_assert!((a + b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn pearson_binary_is_point_biserial(rows in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 2..50)) {
            let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r.1))).collect();
            let ones: Vec<f64> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
            let zeros: Vec<f64> = rows.iter().filter(|r| !r.1).map(|r| r.0).collect();
            let got = pearson(&x, &y).unwrap();
            let s = describe(&x).unwrap().std;
            if ones.is_empty() || zeros.is_empty() || s < 1e-9 {
                prop_assert!(got.is_none() || s < 1e-9);
            } else {
                let n = x.len() as f64;
                let m1 = ones.iter().sum::<f64>() / ones.len() as f64;
                let m0 = zeros.iter().sum::<f64>() / zeros.len() as f64;
                let p = ones.len() as f64 / n;
                let rpb = (m1 - m0) / s * (p * (1.0 - p)).sqrt();
                prop_assert!((got.unwrap() - rpb).abs() < 1e-9);
            }
        }

        #[test]
        fn describe_permutation_invariant(mut v in proptest::collection::vec(0.0f64..1.0, 1..40), seed in 0u64..1000) {
            let a = describe(&v).unwrap();
            let k = (seed as usize) % v.len();
            v.rotate_left(k);
            v.reverse();
            let b = describe(&v).unwrap();
            prop_assert_eq!((a.min, a.q1, a.median, a.q3, a.max), (b.min, b.q1, b.median, b.q3, b.max));
            prop_assert!((a.mean - b.mean).abs() < 1e-12 && (a.std - b.std).abs() < 1e-12);
            prop_assert!(a.min <= a.q1 && a.q1 <= a.median && a.median <= a.q3 && a.q3 <= a.max);
        }
    }
}
