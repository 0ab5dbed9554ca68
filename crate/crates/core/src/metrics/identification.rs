use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparator::cosine_f32;
use crate::dataset_io::{EmbeddingArchive, InstanceId};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    /// Mean rank-k identification rate over folds, k = 1..=max_rank.
    pub ranks: Vec<f64>,
    /// Sample standard deviation over folds of each rank-k rate.
    pub std: Vec<f64>,
    pub per_fold: Vec<Vec<f64>>,
    pub fold_count: usize,
}

impl IdentificationReport {
    /// Mean rate at rank `k` (1-based).
    pub fn rank(&self, k: usize) -> f64 {
        self.ranks[k - 1]
    }
}

/// Closed-set identification with k-fold gallery rotation.
///
/// For each instance the sample order is shuffled once with a seed derived
/// from `seed` and the instance index; fold `f` enrolls the sample at
/// position `f mod count` as that instance's single gallery template and
/// uses every other sample as a probe. A probe's rank is one plus the
/// number of other gallery templates scoring at least as high as its own.
pub fn closed_set_identification(
    archive: &EmbeddingArchive,
    folds: usize,
    max_rank: usize,
    seed: u64,
) -> Result<IdentificationReport> {
    if folds == 0 {
        return Err(Error::InvalidArgument("fold count must be >= 1".into()));
    }
    let mut groups: BTreeMap<InstanceId, Vec<usize>> = BTreeMap::new();
    for (i, r) in archive.records().iter().enumerate() {
        groups.entry(r.key.instance()).or_default().push(i);
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument("empty archive".into()));
    }
    if let Some((inst, _)) = groups.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::InvalidArgument(format!(
            "instance {}-{} has a single sample; closed-set identification needs >= 2",
            inst.subject, inst.finger
        )));
    }
    let n_instances = groups.len();
    if max_rank == 0 || max_rank > n_instances {
        return Err(Error::InvalidArgument(format!(
            "max rank {max_rank} outside 1..={n_instances}"
        )));
    }

    let shuffled: Vec<Vec<usize>> = groups
        .into_values()
        .enumerate()
        .map(|(gi, mut members)| {
            members.shuffle(&mut seed::rng(seed::derive(seed, gi as u64)));
            members
        })
        .collect();

    let records = archive.records();
    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let gallery: Vec<usize> = shuffled.iter().map(|m| m[fold % m.len()]).collect();
            let mut hits = vec![0usize; max_rank];
            let mut probes = 0usize;
            for (truth, members) in shuffled.iter().enumerate() {
                for &probe in members.iter().filter(|&&p| p != gallery[truth]) {
                    probes += 1;
                    let pv = &records[probe].vector;
                    let scores: Vec<f64> = gallery
                        .iter()
                        .map(|&g| cosine_f32(pv, &records[g].vector).expect("archive dims agree"))
                        .collect();
                    let own = scores[truth];
                    let rank = 1 + scores
                        .iter()
                        .enumerate()
                        .filter(|&(g, &s)| g != truth && s >= own)
                        .count();
                    if rank <= max_rank {
                        hits[rank - 1] += 1;
                    }
                }
            }
            let mut cumulative = 0usize;
            hits.iter()
                .map(|&h| {
                    cumulative += h;
                    cumulative as f64 / probes as f64
                })
                .collect()
        })
        .collect();

    let mean: Vec<f64> = (0..max_rank)
        .map(|k| per_fold.iter().map(|f| f[k]).sum::<f64>() / folds as f64)
        .collect();
    let std: Vec<f64> = (0..max_rank)
        .map(|k| {
            if folds < 2 {
                return 0.0;
            }
            let var = per_fold.iter().map(|f| (f[k] - mean[k]).powi(2)).sum::<f64>() / (folds - 1) as f64;
            var.sqrt()
        })
        .collect();

    Ok(IdentificationReport {
        ranks: mean,
        std,
        per_fold,
        fold_count: folds,
    })
}
