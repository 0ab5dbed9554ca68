//! Cosine comparison of fixed-length embeddings, exhaustive score
//! generation and the per-comparison operation-count model.

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset_io::{EmbeddingArchive, SampleKey};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    pub probe: SampleKey,
    pub reference: SampleKey,
    pub score: f64,
}

/// Mated and non-mated comparison scores from one evaluation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub mated: Vec<ScorePair>,
    pub non_mated: Vec<ScorePair>,
}

impl ScoreSet {
    pub fn mated_scores(&self) -> Vec<f64> {
        self.mated.iter().map(|p| p.score).collect()
    }

    pub fn non_mated_scores(&self) -> Vec<f64> {
        self.non_mated.iter().map(|p| p.score).collect()
    }
}

/// Dot product of two unit vectors, summed in index order and clamped to
/// [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    Ok(acc.clamp(-1.0, 1.0))
}

/// Same as [`cosine`] for single-precision storage; accumulates in f64.
pub fn cosine_f32(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        acc += f64::from(x) * f64::from(y);
    }
    Ok(acc.clamp(-1.0, 1.0))
}

/// Operations per comparison of two normalized embeddings of size `n`:
/// `n` multiplications and `n - 1` additions.
pub fn op_count(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("embedding size must be >= 1".into()));
    }
    Ok(2 * n as u64 - 1)
}

/// Workload of size `n` as a percentage of the workload at `baseline`.
pub fn workload_percent(n: usize, baseline: usize) -> Result<f64> {
    let ops = op_count(n)? as f64;
    let base = op_count(baseline)? as f64;
    Ok(ops / base * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadPoint {
    pub n: usize,
    pub ops: u64,
    pub percent_of_baseline: f64,
    /// Optional attached performance value, e.g. FNMR at a fixed FMR.
    pub performance_measure: Option<f64>,
}

pub fn workload_table(sizes: &[usize], baseline: usize) -> Result<Vec<WorkloadPoint>> {
    sizes
        .iter()
        .map(|&n| {
            Ok(WorkloadPoint {
                n,
                ops: op_count(n)?,
                percent_of_baseline: workload_percent(n, baseline)?,
                performance_measure: None,
            })
        })
        .collect()
}

/// Records grouped by instance (stable within an instance), plus for each
/// grouped position the exclusive end of its instance group.
struct Grouping {
    order: Vec<usize>,
    group_end: Vec<usize>,
}

fn group_by_instance(archive: &EmbeddingArchive) -> Grouping {
    let records = archive.records();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].key.instance(), i));
    let mut group_end = vec![0; order.len()];
    let mut start = 0;
    while start < order.len() {
        let inst = records[order[start]].key.instance();
        let mut end = start + 1;
        while end < order.len() && records[order[end]].key.instance() == inst {
            end += 1;
        }
        group_end[start..end].fill(end);
        start = end;
    }
    Grouping { order, group_end }
}

/// Number of mated and non-mated unordered pairs in an archive.
pub fn pair_counts(archive: &EmbeddingArchive) -> (u64, u64) {
    let g = group_by_instance(archive);
    let n = g.order.len() as u64;
    let mut mated = 0u64;
    let mut start = 0;
    while start < g.order.len() {
        let size = (g.group_end[start] - start) as u64;
        mated += size * size.saturating_sub(1) / 2;
        start = g.group_end[start];
    }
    (mated, n * n.saturating_sub(1) / 2 - mated)
}

/// Score every mated pair and every (optionally subsampled) non-mated pair.
///
/// Pairs are enumerated over records grouped by instance; within a pair the
/// earlier grouped record is the probe. When `non_mated_cap` is smaller than
/// the number of non-mated pairs, a uniform sample without replacement of
/// that size is drawn with `seed` and kept in enumeration order.
pub fn all_pairs_scores(archive: &EmbeddingArchive, non_mated_cap: Option<usize>, seed: u64) -> Result<ScoreSet> {
    if archive.is_empty() {
        return Err(Error::InvalidArgument("empty archive".into()));
    }
    let records = archive.records();
    let g = group_by_instance(archive);
    let n = g.order.len();

    let score = |a: usize, b: usize| -> ScorePair {
        let (ra, rb) = (&records[g.order[a]], &records[g.order[b]]);
        ScorePair {
            probe: ra.key,
            reference: rb.key,
            score: cosine_f32(&ra.vector, &rb.vector).expect("archive dims agree"),
        }
    };

    let mated: Vec<ScorePair> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..g.group_end[i]).map(|j| score(i, j)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    // offsets[i] = number of non-mated pairs enumerated before row i
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0usize;
    for i in 0..n {
        offsets.push(acc);
        acc += n - g.group_end[i];
    }
    offsets.push(acc);
    let total_non_mated = acc;

    let non_mated: Vec<ScorePair> = match non_mated_cap {
        Some(cap) if cap < total_non_mated => {
            let mut rng = seed::rng(seed);
            let mut picks = index::sample(&mut rng, total_non_mated, cap).into_vec();
            picks.sort_unstable();
            picks
                .into_par_iter()
                .map(|k| {
                    let row = offsets.partition_point(|&o| o <= k) - 1;
                    let col = g.group_end[row] + (k - offsets[row]);
                    score(row, col)
                })
                .collect()
        }
        _ => (0..n)
            .into_par_iter()
            .map(|i| (g.group_end[i]..n).map(|j| score(i, j)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect(),
    };

    Ok(ScoreSet { mated, non_mated })
}
