//! Metric implementations checked against brute-force counting.

use fplfix_core::comparator::{ScorePair, ScoreSet};
use fplfix_core::dataset_io::{EmbeddingArchive, EmbeddingRecord, SampleKey, Sensor};
use fplfix_core::metrics::{closed_set_identification, SortedScores};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// EER by scanning every distinct score with linear counting.
fn brute_force_eer(mated: &[f64], non_mated: &[f64]) -> (f64, f64) {
    let mut thresholds: Vec<f64> = mated.iter().chain(non_mated).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut best: Option<(f64, f64, f64)> = None; // (|d|, mean, t)
    for &t in &thresholds {
        let fm = non_mated.iter().filter(|&&s| s >= t).count() as f64 / non_mated.len() as f64;
        let fnm = mated.iter().filter(|&&s| s < t).count() as f64 / mated.len() as f64;
        let cand = ((fm - fnm).abs(), 0.5 * (fm + fnm), t);
        let better = match best {
            None => true,
            Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1 < b.1 || (cand.1 == b.1 && cand.2 < b.2))),
        };
        if better {
            best = Some(cand);
        }
    }
    let b = best.unwrap();
    (b.1, b.2)
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize, mean: f64, std: f64, round: bool) -> Vec<f64> {
    let d = Normal::new(mean, std).unwrap();
    (0..n)
        .map(|_| {
            let v: f64 = d.sample(rng);
            let v = v.clamp(-1.0, 1.0);
            if round {
                (v * 50.0).round() / 50.0
            } else {
                v
            }
        })
        .collect()
}

#[test]
fn eer_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..150 {
        let m = rng.gen_range(10..400);
        let n = rng.gen_range(10..400);
        let round = case % 3 == 0;
        let (mu_m, mu_n) = (rng.gen_range(0.0..0.8), rng.gen_range(-0.2..0.5));
        let mated = random_scores(&mut rng, m, mu_m, 0.2, round);
        let non_mated = random_scores(&mut rng, n, mu_n, 0.2, round);
        let (eer, t) = brute_force_eer(&mated, &non_mated);
        let got = SortedScores::new(mated, non_mated).unwrap().eer();
        assert!((got.eer - eer).abs() <= 1e-12, "case {case}: {} vs {eer}", got.eer);
        assert_eq!(got.threshold, t);
    }
}

#[test]
fn fnmr_at_fmr_is_the_lowest_admissible_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let mated = random_scores(&mut rng, 200, 0.5, 0.2, true);
        let non_mated = random_scores(&mut rng, 300, 0.0, 0.2, true);
        let s = SortedScores::new(mated.clone(), non_mated.clone()).unwrap();
        let target = rng.gen_range(0.001..0.5);
        let op = s.fnmr_at_fmr(target).unwrap();
        let fmr_at = |t: f64| non_mated.iter().filter(|&&x| x >= t).count() as f64 / 300.0;
        assert!(fmr_at(op.threshold) <= target + 1e-12);
        // the next lower candidate (any score below the threshold) overshoots
        if let Some(lower) = non_mated.iter().copied().filter(|&x| x < op.threshold).reduce(f64::max) {
            assert!(fmr_at(lower) > target);
        }
        let fnmr = mated.iter().filter(|&&x| x < op.threshold).count() as f64 / 200.0;
        assert_eq!(op.fnmr, fnmr);
    }
}

#[test]
fn det_of_identical_distributions_follows_the_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mated = random_scores(&mut rng, 20_000, 0.0, 0.3, false);
    let non_mated = random_scores(&mut rng, 20_000, 0.0, 0.3, false);
    let det = SortedScores::new(mated, non_mated).unwrap().det_curve(50).unwrap();
    for p in &det {
        // fnmr + fmr = 1 up to sampling noise
        assert!((p.fmr + p.fnmr - 1.0).abs() < 0.03, "{p:?}");
    }
}

fn archive(rows: Vec<(SampleKey, Vec<f64>)>) -> EmbeddingArchive {
    let dim = rows[0].1.len();
    EmbeddingArchive::from_f64(dim, rows.into_iter().map(|(k, v)| (k, Sensor::Synthetic, v)).collect()).unwrap()
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let d = Normal::new(0.0, 1.0).unwrap();
    let v: Vec<f64> = (0..dim).map(|_| d.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

#[test]
fn identification_beats_label_shuffled_control() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (instances, samples, dim) = (40u32, 6u16, 32);
    let mut rows = Vec::new();
    let mut shuffled_rows = Vec::new();
    let mut labels: Vec<u32> = (0..instances)
        .flat_map(|s| std::iter::repeat_n(s, samples as usize))
        .collect();
    use rand::seq::SliceRandom;
    labels.shuffle(&mut rng);
    let mut counter = vec![0u16; instances as usize];
    for s in 0..instances {
        let center = unit(&mut rng, dim);
        for k in 0..samples {
            let noise = unit(&mut rng, dim);
            let v: Vec<f64> = center.iter().zip(&noise).map(|(c, e)| c + 0.3 * e).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v: Vec<f64> = v.into_iter().map(|x| x / n).collect();
            rows.push((SampleKey::new(s, 0, k), v.clone()));
            let l = labels[(s as usize) * samples as usize + k as usize];
            shuffled_rows.push((SampleKey::new(l, 0, counter[l as usize]), v));
            counter[l as usize] += 1;
        }
    }
    let real = closed_set_identification(&archive(rows), 5, 40, 1).unwrap();
    let control = closed_set_identification(&archive(shuffled_rows), 5, 40, 1).unwrap();
    assert!(real.rank(1) > 0.9);
    assert!(control.rank(1) < 0.2, "{}", control.rank(1));
    assert!(real.rank(1) >= control.rank(1));
    assert_eq!(real.rank(40), 1.0);
}

#[test]
fn score_set_round_trip_through_sorted_scores() {
    let key = SampleKey::new(0, 0, 0);
    let pair = |s| ScorePair {
        probe: key,
        reference: key,
        score: s,
    };
    let set = ScoreSet {
        mated: vec![pair(0.9), pair(0.2)],
        non_mated: vec![pair(0.1), pair(0.5)],
    };
    let s = SortedScores::from_set(&set).unwrap();
    assert_eq!(s.mated(), &[0.2, 0.9]);
    assert_eq!(s.non_mated(), &[0.1, 0.5]);
}

#[test]
fn archive_records_keep_order() {
    let rec = |s: u32| EmbeddingRecord {
        key: SampleKey::new(s, 0, 0),
        sensor: Sensor::Optical,
        vector: vec![1.0, 0.0],
    };
    let a = EmbeddingArchive::new(2, vec![rec(3), rec(1)]).unwrap();
    assert_eq!(a.records()[0].key.subject, 3);
}
