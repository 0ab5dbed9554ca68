//! End-to-end extraction and the embedding-dimension sweep.
//!
//! Every image goes through `crop_resize`, an optional perturbation and
//! Gabor enhancement before a branch extractor runs on it. Raw
//! embeddings always pass through the f32 [`EmbeddingArchive`] so that
//! cached and freshly extracted runs score identically.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::comparator::{all_pairs_scores, op_count};
use crate::dataset_io::{load_image, EmbeddingArchive, GrayImage, InstanceId, SampleRecord};
use crate::embedding::{concat_branches, fit_projection, ProjectionModel};
use crate::error::{Error, Result};
use crate::metrics::SortedScores;
use crate::minutiae::{
    build_minutiae_map, detect_minutiae_with, extract_minutiae_embedding, DetectionParams, MapGeometry, Minutia,
    MinutiaeTable, MINUTIAE_CHANNELS,
};
use crate::preprocess::{
    apply_perturbation, crop_resize, enhance, frame_point, EnhancementParams, Perturbation, FRAME_SIZE,
};
use crate::seed;
use crate::texture::{TextureBank, TextureBankParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Texture,
    Minutiae,
    Concat,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Texture => "texture",
            Branch::Minutiae => "minutiae",
            Branch::Concat => "concat",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "texture" => Ok(Branch::Texture),
            "minutiae" => Ok(Branch::Minutiae),
            "concat" => Ok(Branch::Concat),
            other => Err(Error::InvalidArgument(format!("unknown branch '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    pub enhancement: EnhancementParams,
    pub texture: TextureBankParams,
    pub map: MapGeometry,
    pub minutiae_grid: usize,
    pub detection: DetectionParams,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            enhancement: EnhancementParams::default(),
            texture: TextureBankParams::default(),
            map: MapGeometry::default(),
            minutiae_grid: 8,
            detection: DetectionParams::default(),
        }
    }
}

/// Branch extractors with precomputed filters; cheap to share.
#[derive(Debug, Clone)]
pub struct Extractor {
    config: ExtractionConfig,
    bank: TextureBank,
}

impl Extractor {
    pub fn new(config: ExtractionConfig) -> Result<Self> {
        config.enhancement.validate()?;
        if config.minutiae_grid == 0 || config.minutiae_grid > config.map.resolution {
            return Err(Error::InvalidArgument(format!(
                "minutiae grid {} outside 1..={}",
                config.minutiae_grid, config.map.resolution
            )));
        }
        let bank = TextureBank::new(config.texture.clone())?;
        Ok(Self { config, bank })
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.config
    }

    pub fn texture_dim(&self) -> usize {
        self.bank.raw_dim()
    }

    pub fn minutiae_dim(&self) -> usize {
        MINUTIAE_CHANNELS * self.config.minutiae_grid * self.config.minutiae_grid
    }

    pub fn raw_dim(&self, branch: Branch) -> usize {
        match branch {
            Branch::Texture => self.texture_dim(),
            Branch::Minutiae => self.minutiae_dim(),
            Branch::Concat => self.texture_dim() + self.minutiae_dim(),
        }
    }

    pub fn texture(&self, frame: &GrayImage) -> Result<Vec<f64>> {
        self.bank.extract(&enhance(frame, &self.config.enhancement)?)
    }

    pub fn detect(&self, frame: &GrayImage) -> Result<Vec<Minutia>> {
        let params = EnhancementParams {
            binarize: true,
            ..self.config.enhancement
        };
        Ok(detect_minutiae_with(&enhance(frame, &params)?, &self.config.detection))
    }

    pub fn minutiae_from(&self, minutiae: &[Minutia]) -> Result<Vec<f64>> {
        let map = build_minutiae_map(minutiae, &self.config.map)?;
        extract_minutiae_embedding(&map, self.config.minutiae_grid)
    }

    /// Raw unit-norm embedding of a normalized frame. With `minutiae`
    /// given, the minutiae branch uses them instead of running detection.
    pub fn embed(&self, branch: Branch, frame: &GrayImage, minutiae: Option<&[Minutia]>) -> Result<Vec<f64>> {
        let minutiae_branch = || match minutiae {
            Some(m) => self.minutiae_from(m),
            None => self.minutiae_from(&self.detect(frame)?),
        };
        match branch {
            Branch::Texture => self.texture(frame),
            Branch::Minutiae => minutiae_branch(),
            Branch::Concat => concat_branches(&self.texture(frame)?, &minutiae_branch()?),
        }
    }
}

/// Load every record's image, resolving relative paths against `root`, and
/// normalize it to the square frame.
pub fn load_frames(records: &[SampleRecord], root: &Path) -> Result<Vec<GrayImage>> {
    Ok(load_frames_sized(records, root)?.into_iter().map(|(f, _)| f).collect())
}

/// Like [`load_frames`], also returning each source image's size.
pub fn load_frames_sized(records: &[SampleRecord], root: &Path) -> Result<Vec<(GrayImage, (usize, usize))>> {
    records
        .par_iter()
        .map(|r| {
            let path = if r.image_path.is_absolute() {
                r.image_path.clone()
            } else {
                root.join(&r.image_path)
            };
            let img = load_image(&path)?;
            let size = (img.width(), img.height());
            Ok((crop_resize(&img), size))
        })
        .collect()
}

/// Ground-truth minutiae of each record, mapped into the normalized frame.
/// Minutiae that leave the frame are dropped; records missing from the
/// table get an empty list.
pub fn frame_minutiae(
    records: &[SampleRecord],
    table: &MinutiaeTable,
    source_sizes: &[(usize, usize)],
) -> Vec<Vec<Minutia>> {
    let limit = FRAME_SIZE as f64;
    records
        .iter()
        .zip(source_sizes)
        .map(|(r, &(w, h))| {
            table
                .get(&r.key)
                .map(|list| {
                    list.iter()
                        .filter_map(|m| {
                            let (x, y) = frame_point(w, h, m.x, m.y);
                            (x >= 0.0 && y >= 0.0 && x < limit && y < limit).then(|| Minutia::new(x, y, m.theta))
                        })
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect()
}

/// Extract one embedding per frame, optionally perturbing each frame
/// first.
pub fn extract_embeddings(
    extractor: &Extractor,
    branch: Branch,
    frames: &[GrayImage],
    minutiae: Option<&[Vec<Minutia>]>,
    perturbations: Option<&[Perturbation]>,
) -> Vec<Result<Vec<f64>>> {
    (0..frames.len())
        .into_par_iter()
        .map(|i| {
            let perturbed;
            let frame = match perturbations.map(|p| &p[i]) {
                Some(p) if !p.is_identity() => {
                    perturbed = apply_perturbation(&frames[i], p);
                    &perturbed
                }
                _ => &frames[i],
            };
            let m = minutiae.map(|m| m[i].as_slice());
            extractor.embed(branch, frame, m)
        })
        .collect()
}

/// Extract a raw archive for `records`; any failed extraction is an error.
pub fn extract_archive(
    extractor: &Extractor,
    branch: Branch,
    records: &[SampleRecord],
    frames: &[GrayImage],
    minutiae: Option<&[Vec<Minutia>]>,
) -> Result<EmbeddingArchive> {
    if records.len() != frames.len() {
        return Err(Error::DimensionMismatch {
            expected: records.len(),
            actual: frames.len(),
        });
    }
    let vectors = extract_embeddings(extractor, branch, frames, minutiae, None);
    let mut rows = Vec::with_capacity(records.len());
    for (r, v) in records.iter().zip(vectors) {
        let v = v.map_err(|e| annotate(e, &r.key.to_string()))?;
        rows.push((r.key, r.sensor, v));
    }
    EmbeddingArchive::from_f64(extractor.raw_dim(branch), rows)
}

fn annotate(e: Error, key: &str) -> Error {
    match e {
        Error::Degenerate(m) => Error::Degenerate(format!("sample {key}: {m}")),
        other => other,
    }
}

/// Project every record of an archive, keeping keys and order.
pub fn reduce_archive(model: &ProjectionModel, archive: &EmbeddingArchive) -> Result<EmbeddingArchive> {
    let rows = archive
        .records()
        .par_iter()
        .map(|r| {
            let v: Vec<f64> = r.vector.iter().map(|&x| f64::from(x)).collect();
            Ok((
                r.key,
                r.sensor,
                model.project(&v).map_err(|e| annotate(e, &r.key.to_string()))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingArchive::from_f64(model.output_dim(), rows)
}

/// Fit a projection on the vectors of an archive.
pub fn fit_archive_projection(archive: &EmbeddingArchive, n: usize) -> Result<ProjectionModel> {
    fit_projection(&archive.vectors_f64(), n)
}

/// Split an archive by instance: a seeded shuffle of the distinct
/// instances puts the first `floor(k/2)` into the training part.
pub fn split_by_instance(archive: &EmbeddingArchive, seed: u64) -> Result<(EmbeddingArchive, EmbeddingArchive)> {
    let instances: BTreeSet<InstanceId> = archive.records().iter().map(|r| r.key.instance()).collect();
    if instances.len() < 2 {
        return Err(Error::InvalidArgument(
            "instance split needs at least 2 instances".into(),
        ));
    }
    let mut order: Vec<InstanceId> = instances.into_iter().collect();
    order.shuffle(&mut seed::rng(seed));
    let train: BTreeSet<InstanceId> = order[..order.len() / 2].iter().copied().collect();
    let (a, b): (Vec<_>, Vec<_>) = archive
        .records()
        .iter()
        .cloned()
        .partition(|r| train.contains(&r.key.instance()));
    Ok((
        EmbeddingArchive::new(archive.dim(), a)?,
        EmbeddingArchive::new(archive.dim(), b)?,
    ))
}

/// A projection fitted on the training instances of a split, together
/// with both halves of the split.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOut {
    pub model: ProjectionModel,
    pub train: EmbeddingArchive,
    pub test: EmbeddingArchive,
}

/// The split and `n`-dimensional projection used by [`sweep`] for `seed`.
pub fn held_out_projection(raw: &EmbeddingArchive, n: usize, seed: u64) -> Result<HeldOut> {
    let (train, test) = split_by_instance(raw, seed::derive(seed, 0))?;
    let model = fit_archive_projection(&train, n)?;
    Ok(HeldOut { model, train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub ops: u64,
    pub fnmr: f64,
    pub eer: f64,
}

/// Sweep output: one row per requested dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub train_records: usize,
    pub test_records: usize,
}

/// Fit one projection on the training instances and evaluate every `N`
/// on the held-out instances.
pub fn sweep(raw: &EmbeddingArchive, dims: &[usize], fmr_target: f64, seed: u64) -> Result<SweepResult> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("no sweep dimensions given".into()));
    }
    if let Some(&n) = dims.iter().find(|&&n| n == 0 || n > raw.dim()) {
        return Err(Error::InvalidArgument(format!(
            "sweep dimension {n} outside 1..={} (raw feature dimension)",
            raw.dim()
        )));
    }
    let max_n = *dims.iter().max().expect("non-empty");
    let HeldOut {
        model: full,
        train,
        test,
    } = held_out_projection(raw, max_n, seed)?;
    let rows = dims
        .iter()
        .map(|&n| {
            let reduced = reduce_archive(&full.truncated(n)?, &test)?;
            let scores = SortedScores::from_set(&all_pairs_scores(&reduced, None, 0)?)?;
            Ok(SweepRow {
                n,
                ops: op_count(n)?,
                fnmr: scores.fnmr_at_fmr(fmr_target)?.fnmr,
                eer: scores.eer().eer,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        train_records: train.len(),
        test_records: test.len(),
    })
}
