use serde::Serialize;

use crate::comparator::ScoreSet;
use crate::error::{Error, Result};

/// Upper end of the FMR axis for DET curves.
pub const DET_MAX_FMR: f64 = 0.4;
const DET_MIN_FMR: f64 = 1e-6;

/// Mated and non-mated scores sorted ascending, for threshold queries.
///
/// A comparison is a match when `score >= threshold`.
#[derive(Debug, Clone)]
pub struct SortedScores {
    mated: Vec<f64>,
    non_mated: Vec<f64>,
}

impl SortedScores {
    pub fn new(mut mated: Vec<f64>, mut non_mated: Vec<f64>) -> Result<Self> {
        if mated.is_empty() || non_mated.is_empty() {
            return Err(Error::InvalidArgument(
                "mated and non-mated score lists must both be non-empty".into(),
            ));
        }
        if mated.iter().chain(&non_mated).any(|s| s.is_nan()) {
            return Err(Error::InvalidArgument("NaN score".into()));
        }
        mated.sort_by(f64::total_cmp);
        non_mated.sort_by(f64::total_cmp);
        Ok(Self { mated, non_mated })
    }

    pub fn from_set(scores: &ScoreSet) -> Result<Self> {
        Self::new(scores.mated_scores(), scores.non_mated_scores())
    }

    pub fn mated(&self) -> &[f64] {
        &self.mated
    }

    pub fn non_mated(&self) -> &[f64] {
        &self.non_mated
    }

    fn below(sorted: &[f64], t: f64) -> usize {
        sorted.partition_point(|&s| s < t)
    }

    pub fn fmr(&self, t: f64) -> f64 {
        let n = self.non_mated.len();
        (n - Self::below(&self.non_mated, t)) as f64 / n as f64
    }

    pub fn fnmr(&self, t: f64) -> f64 {
        Self::below(&self.mated, t) as f64 / self.mated.len() as f64
    }

    /// Equal error rate on the empirical step functions.
    ///
    /// Every distinct score is a candidate threshold. The winner minimizes
    /// `|fmr - fnmr|`, then the mean of the two rates, then the threshold.
    pub fn eer(&self) -> EerPoint {
        let (nm, m) = (self.non_mated.len(), self.mated.len());
        let mut best: Option<EerPoint> = None;
        let (mut i, mut j) = (0usize, 0usize);
        // merge-walk the distinct values of both sorted lists
        while i < m || j < nm {
            let t = match (self.mated.get(i), self.non_mated.get(j)) {
                (Some(&a), Some(&b)) => a.min(b),
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (None, None) => unreachable!(),
            };
            // i, j are the counts of scores strictly below t
            let fnmr = i as f64 / m as f64;
            let fmr = (nm - j) as f64 / nm as f64;
            let candidate = EerPoint {
                eer: 0.5 * (fmr + fnmr),
                threshold: t,
                fmr,
                fnmr,
            };
            if best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                best = Some(candidate);
            }
            while i < m && self.mated[i] == t {
                i += 1;
            }
            while j < nm && self.non_mated[j] == t {
                j += 1;
            }
        }
        best.expect("non-empty score lists")
    }

    /// Operating point at the lowest threshold whose FMR does not exceed
    /// `target`.
    pub fn fnmr_at_fmr(&self, target: f64) -> Result<FnmrAtFmr> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidArgument(format!("target FMR {target} outside (0, 1)")));
        }
        let n = self.non_mated.len();
        // largest admissible number of false matches
        let allowed = ((target * n as f64) * (1.0 + 1e-12)).floor() as usize;
        let threshold = if allowed >= n {
            f64::NEG_INFINITY
        } else {
            self.non_mated[n - 1 - allowed].next_up()
        };
        Ok(FnmrAtFmr {
            target,
            fnmr: self.fnmr(threshold),
            fmr: self.fmr(threshold),
            threshold,
            resolution_warning: (n as f64) * target < 1.0,
        })
    }

    pub fn det_curve(&self, n_points: usize) -> Result<Vec<DetPoint>> {
        if n_points < 2 {
            return Err(Error::InvalidArgument("DET curve needs at least 2 points".into()));
        }
        let lo = (1.0 / self.non_mated.len() as f64).clamp(DET_MIN_FMR, DET_MAX_FMR);
        let (llo, lhi) = (lo.ln(), DET_MAX_FMR.ln());
        let mut points: Vec<DetPoint> = Vec::with_capacity(n_points);
        for k in 0..n_points {
            let frac = k as f64 / (n_points - 1) as f64;
            let target = if k + 1 == n_points {
                DET_MAX_FMR
            } else {
                (llo + (lhi - llo) * frac).exp()
            };
            let op = self.fnmr_at_fmr(target)?;
            let p = DetPoint {
                fmr: op.fmr,
                fnmr: op.fnmr,
                threshold: op.threshold,
            };
            if points.last().is_none_or(|q| q.fmr != p.fmr || q.fnmr != p.fnmr) {
                points.push(p);
            }
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

impl EerPoint {
    fn better_than(&self, other: &EerPoint) -> bool {
        let (d, od) = ((self.fmr - self.fnmr).abs(), (other.fmr - other.fnmr).abs());
        if d != od {
            return d < od;
        }
        if self.eer != other.eer {
            return self.eer < other.eer;
        }
        self.threshold < other.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnmrAtFmr {
    pub target: f64,
    pub fnmr: f64,
    /// FMR actually achieved at `threshold`.
    pub fmr: f64,
    pub threshold: f64,
    /// Set when there are too few non-mated scores to resolve `target`.
    pub resolution_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetPoint {
    pub fmr: f64,
    pub fnmr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub eer: f64,
    pub eer_threshold: f64,
    pub fnmr_at: Vec<FnmrAtFmr>,
    pub det: Vec<DetPoint>,
    pub mated_count: usize,
    pub non_mated_count: usize,
}

pub fn fmr_fnmr(scores: &ScoreSet, threshold: f64) -> Result<(f64, f64)> {
    let s = SortedScores::from_set(scores)?;
    Ok((s.fmr(threshold), s.fnmr(threshold)))
}

pub fn eer(scores: &ScoreSet) -> Result<EerPoint> {
    Ok(SortedScores::from_set(scores)?.eer())
}

pub fn fnmr_at_fmr(scores: &ScoreSet, target: f64) -> Result<FnmrAtFmr> {
    SortedScores::from_set(scores)?.fnmr_at_fmr(target)
}

pub fn det_curve(scores: &ScoreSet, n_points: usize) -> Result<Vec<DetPoint>> {
    SortedScores::from_set(scores)?.det_curve(n_points)
}

pub fn verification_report(scores: &ScoreSet, fmr_targets: &[f64], det_points: usize) -> Result<VerificationReport> {
    let s = SortedScores::from_set(scores)?;
    let e = s.eer();
    let fnmr_at = fmr_targets
        .iter()
        .map(|&t| s.fnmr_at_fmr(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        eer: e.eer,
        eer_threshold: e.threshold,
        fnmr_at,
        det: s.det_curve(det_points)?,
        mated_count: s.mated.len(),
        non_mated_count: s.non_mated.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_three() -> SortedScores {
        SortedScores::new(vec![0.7, 0.8, 0.9], vec![0.5, 0.6, 0.75]).unwrap()
    }

    #[test]
    fn counting_at_threshold() {
        let s = three_three();
        assert_eq!((s.fmr(0.75), s.fnmr(0.75)), (1.0 / 3.0, 1.0 / 3.0));
        assert_eq!((s.fmr(-2.0), s.fnmr(-2.0)), (1.0, 0.0));
        assert_eq!((s.fmr(2.0), s.fnmr(2.0)), (0.0, 1.0));
    }

    #[test]
    fn eer_small_set() {
        let e = three_three().eer();
        assert_eq!(e.eer, 1.0 / 3.0);
        assert_eq!(e.threshold, 0.75);
    }

    #[test]
    fn eer_separated_is_zero() {
        let s = SortedScores::new(vec![0.8, 0.9], vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(s.eer().eer, 0.0);
        assert_eq!(s.eer().threshold, 0.8);
    }

    #[test]
    fn empty_lists_rejected() {
        assert!(SortedScores::new(vec![], vec![0.1]).is_err());
        assert!(SortedScores::new(vec![0.1], vec![]).is_err());
    }

    #[test]
    fn fnmr_at_small_target() {
        let op = three_three().fnmr_at_fmr(0.001).unwrap();
        assert_eq!(op.fnmr, 1.0 / 3.0);
        assert_eq!(op.fmr, 0.0);
        assert!(op.threshold > 0.75 && op.threshold < 0.7500001);
        assert!(op.resolution_warning);
    }

    #[test]
    fn fnmr_at_separated_is_zero() {
        let s = SortedScores::new(vec![0.8, 0.9], vec![0.1, 0.2, 0.3]).unwrap();
        for t in [1e-6, 0.001, 0.5] {
            assert_eq!(s.fnmr_at_fmr(t).unwrap().fnmr, 0.0);
        }
    }

    #[test]
    fn resolution_warning_with_100_non_mated() {
        let nm: Vec<f64> = (0..100).map(|i| i as f64 / 200.0).collect();
        let s = SortedScores::new(vec![0.9], nm).unwrap();
        assert!(s.fnmr_at_fmr(0.001).unwrap().resolution_warning);
        assert!(!s.fnmr_at_fmr(0.01).unwrap().resolution_warning);
        assert!(s.fnmr_at_fmr(0.0).is_err());
        assert!(s.fnmr_at_fmr(1.0).is_err());
    }

    #[test]
    fn det_separated_is_all_zero() {
        let s = SortedScores::new(vec![0.8, 0.9, 0.95], (0..50).map(|i| i as f64 / 100.0).collect()).unwrap();
        let det = s.det_curve(20).unwrap();
        assert!(!det.is_empty());
        assert!(det.iter().all(|p| p.fnmr == 0.0));
        assert!(det.iter().all(|p| p.fmr <= DET_MAX_FMR));
    }
}
