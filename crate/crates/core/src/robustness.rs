//! FNMR under random probe rotation and translation.
//!
//! The decision threshold is frozen from the unperturbed run. Each grid
//! cell then perturbs every probe image, re-extracts it and scores it
//! against the clean references of its own instance.

use rayon::prelude::*;

use crate::comparator::{all_pairs_scores, cosine_f32};
use crate::dataset_io::{EmbeddingArchive, GrayImage, SampleRecord};
use crate::embedding::ProjectionModel;
use crate::error::{Error, Result};
use crate::metrics::SortedScores;
use crate::minutiae::Minutia;
use crate::pipeline::{extract_archive, extract_embeddings, reduce_archive, Branch, Extractor};
use crate::preprocess::{AugmentationParams, Perturbation};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Maximum rotations in degrees.
    pub r_values: Vec<f64>,
    /// Maximum translations in pixels.
    pub t_values: Vec<f64>,
    pub fmr_target: f64,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let steps: Vec<f64> = (0..6).map(|i| 10.0 * i as f64).collect();
        Self {
            r_values: steps.clone(),
            t_values: steps,
            fmr_target: 0.001,
            seed: 0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_values.is_empty() || self.t_values.is_empty() {
            return Err(Error::InvalidArgument("empty perturbation grid".into()));
        }
        for v in self.r_values.iter().chain(&self.t_values) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "grid value {v} must be finite and >= 0"
                )));
            }
        }
        if !(self.fmr_target > 0.0 && self.fmr_target < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target FMR {} outside (0, 1)",
                self.fmr_target
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PerturbationGrid {
    pub r_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// `fnmr[ti][ri]` for `t_values[ti]`, `r_values[ri]`.
    pub fnmr: Vec<Vec<f64>>,
    pub fmr_target: f64,
    /// Threshold frozen from the unperturbed run.
    pub threshold: f64,
    pub baseline_fnmr: f64,
    pub baseline_fmr: f64,
    pub seed: u64,
}

impl PerturbationGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.t_values.len(), self.r_values.len())
    }

    pub fn at(&self, r: f64, t: f64) -> Option<f64> {
        let ri = self.r_values.iter().position(|&v| v == r)?;
        let ti = self.t_values.iter().position(|&v| v == t)?;
        Some(self.fnmr[ti][ri])
    }
}

/// Inputs shared by the baseline and every cell.
pub struct StudyInput<'a> {
    pub records: &'a [SampleRecord],
    pub frames: &'a [GrayImage],
    /// Ground-truth minutiae per record, in frame coordinates.
    pub minutiae: Option<&'a [Vec<Minutia>]>,
    pub extractor: &'a Extractor,
    pub branch: Branch,
    /// Optional reduction applied after extraction.
    pub projection: Option<&'a ProjectionModel>,
}

impl StudyInput<'_> {
    fn clean_archive(&self) -> Result<EmbeddingArchive> {
        let raw = extract_archive(self.extractor, self.branch, self.records, self.frames, self.minutiae)?;
        match self.projection {
            Some(p) => reduce_archive(p, &raw),
            None => Ok(raw),
        }
    }

    /// Embeddings of perturbed frames, rounded to f32 like archive
    /// vectors; `None` marks a failed extraction.
    fn perturbed(&self, perturbations: &[Perturbation]) -> Vec<Option<Vec<f32>>> {
        // ground-truth minutiae move with the image
        let moved: Option<Vec<Vec<Minutia>>> = self.minutiae.map(|all| {
            all.iter()
                .zip(perturbations)
                .map(|(list, p)| move_minutiae(list, p, self.frames[0].width(), self.frames[0].height()))
                .collect()
        });
        extract_embeddings(
            self.extractor,
            self.branch,
            self.frames,
            moved.as_deref(),
            Some(perturbations),
        )
        .into_par_iter()
        .map(|v| {
            // same f32 round trip as the clean archive path
            let v: Vec<f64> = v.ok()?.into_iter().map(|x| f64::from(x as f32)).collect();
            let v = match self.projection {
                Some(p) => p.project(&v).ok()?,
                None => v,
            };
            Some(v.into_iter().map(|x| x as f32).collect())
        })
        .collect()
    }
}

fn move_minutiae(list: &[Minutia], p: &Perturbation, w: usize, h: usize) -> Vec<Minutia> {
    if p.is_identity() {
        return list.to_vec();
    }
    list.iter()
        .filter_map(|m| {
            let (x, y) = p.map_point(w, h, m.x, m.y);
            (x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64)
                .then(|| Minutia::new(x, y, m.theta + p.rotation_deg.to_radians()))
        })
        .collect()
}

/// Seed of the perturbation applied to record `record` in cell `cell`.
pub fn cell_record_seed(grid_seed: u64, cell: usize, record: usize) -> u64 {
    seed::derive(seed::derive(grid_seed, cell as u64), record as u64)
}

/// Run the full grid.
pub fn perturbation_study(input: &StudyInput<'_>, grid: &GridConfig) -> Result<PerturbationGrid> {
    grid.validate()?;
    if input.records.len() != input.frames.len() {
        return Err(Error::DimensionMismatch {
            expected: input.records.len(),
            actual: input.frames.len(),
        });
    }
    let clean = input.clean_archive()?;
    let baseline = SortedScores::from_set(&all_pairs_scores(&clean, None, grid.seed)?)?;
    let op = baseline.fnmr_at_fmr(grid.fmr_target)?;
    let threshold = op.threshold;

    // ordered mated pairs (probe, reference), probe != reference
    let records = clean.records();
    let mut pairs = Vec::new();
    for (i, a) in records.iter().enumerate() {
        for (j, b) in records.iter().enumerate() {
            if i != j && a.key.instance() == b.key.instance() {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no mated pairs in the study set".into()));
    }

    let cells: Vec<(usize, usize)> = (0..grid.t_values.len())
        .flat_map(|ti| (0..grid.r_values.len()).map(move |ri| (ti, ri)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(ti, ri))| {
            let perturbations: Vec<Perturbation> = (0..records.len())
                .map(|k| {
                    AugmentationParams::geometric(
                        grid.r_values[ri],
                        grid.t_values[ti],
                        cell_record_seed(grid.seed, cell, k),
                    )
                    .draw()
                })
                .collect();
            let probes = input.perturbed(&perturbations);
            let misses = pairs
                .iter()
                .filter(|&&(i, j)| match &probes[i] {
                    Some(p) => cosine_f32(p, &records[j].vector).expect("dims agree") < threshold,
                    None => true,
                })
                .count();
            misses as f64 / pairs.len() as f64
        })
        .collect();

    let fnmr = values.chunks(grid.r_values.len()).map(<[f64]>::to_vec).collect();
    Ok(PerturbationGrid {
        r_values: grid.r_values.clone(),
        t_values: grid.t_values.clone(),
        fnmr,
        fmr_target: grid.fmr_target,
        threshold,
        baseline_fnmr: op.fnmr,
        baseline_fmr: op.fmr,
        seed: grid.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = GridConfig::default();
        assert_eq!(g.r_values, vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(g.t_values.len(), 6);
        assert!(g.validate().is_ok());
        let bad = GridConfig {
            r_values: vec![-1.0],
            ..GridConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_cell_draws_identity() {
        let p = AugmentationParams::geometric(0.0, 0.0, cell_record_seed(5, 0, 3)).draw();
        assert!(p.is_identity());
    }

    #[test]
    fn minutiae_follow_perturbation() {
        let p = Perturbation {
            dx: 5.0,
            ..Perturbation::default()
        };
        let moved = move_minutiae(
            &[Minutia::new(10.0, 10.0, 0.0), Minutia::new(296.0, 1.0, 0.0)],
            &p,
            299,
            299,
        );
        assert_eq!(moved, vec![Minutia::new(15.0, 10.0, 0.0)]);
    }
}
