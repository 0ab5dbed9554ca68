use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fplfix_core::comparator::{all_pairs_scores, workload_table};
use fplfix_core::dataset_io::{
    load_image, load_manifest, read_archive, read_scores, write_archive, write_pgm, write_scores, EmbeddingArchive,
    GrayImage, SampleRecord,
};
use fplfix_core::embedding::{concat_branches, read_projection, truncate, write_projection, ProjectionModel};
use fplfix_core::metrics::{closed_set_identification, verification_report};
use fplfix_core::minutiae::{read_minutiae_csv, Minutia};
use fplfix_core::pipeline::{
    extract_archive, fit_archive_projection, frame_minutiae, load_frames_sized, reduce_archive, sweep, Branch,
    ExtractionConfig, Extractor,
};
use fplfix_core::preprocess::{augment, enhance, AugmentationParams, EnhancementParams};
use fplfix_core::robustness::{perturbation_study, GridConfig, StudyInput};
use fplfix_core::synthgen::{generate_corpus, SynthConfig};
use fplfix_core::Error;

use crate::output::{ensure_parent, write_csv, write_json};
use crate::{
    AugmentArgs, Command, CompareArgs, EnhanceArgs, EnhancementOpts, EvalIdentifyArgs, EvalVerifyArgs, ExtractArgs,
    PerturbGridArgs, ReduceArgs, ReduceMethod, SweepArgs, SynthArgs, WorkloadArgs,
};

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Enhance(a) => enhance_cmd(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Extract(a) => extract(a),
        Command::Reduce(a) => reduce(a),
        Command::Compare(a) => compare(a),
        Command::EvalVerify(a) => eval_verify(a),
        Command::EvalIdentify(a) => eval_identify(a),
        Command::PerturbGrid(a) => perturb_grid(a),
        Command::Workload(a) => workload(a),
        Command::Sweep(a) => sweep_cmd(a),
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn synth(a: &SynthArgs) -> Result<()> {
    let corpus = generate_corpus(&SynthConfig::new(a.identities, a.samples, a.seed))?;
    corpus.write(&a.out)?;
    eprintln!("wrote {} images to {}", corpus.samples.len(), a.out.display());
    Ok(())
}

fn enhancement_params(o: &EnhancementOpts) -> EnhancementParams {
    EnhancementParams {
        block_size: o.block_size,
        gabor_sigma: o.gabor_sigma,
        binarize: o.binarize,
        ..EnhancementParams::default()
    }
}

fn enhance_cmd(a: &EnhanceArgs) -> Result<()> {
    let params = enhancement_params(&a.params);
    if let Some(input) = &a.input {
        let out = enhance(&load_image(input)?, &params)?;
        ensure_parent(&a.out)?;
        write_pgm(&a.out, &out)?;
        return Ok(());
    }
    let manifest = a.manifest.as_ref().expect("clap enforces a source");
    let (records, frames) = load_corpus(manifest)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (r, (frame, _)) in records.iter().zip(&frames) {
        let k = r.key;
        let path = a.out.join(format!("{}_{}_{}.pgm", k.subject, k.finger, k.sample));
        write_pgm(&path, &enhance(frame, &params)?)?;
    }
    Ok(())
}

fn augment_cmd(a: &AugmentArgs) -> Result<()> {
    let params = AugmentationParams {
        max_rotation_deg: a.max_rotation,
        max_shift_px: a.max_shift,
        brightness_delta: a.brightness,
        contrast_delta: a.contrast,
        seed: a.seed,
    };
    let out = augment(&load_image(&a.input)?, &params)?;
    ensure_parent(&a.out)?;
    write_pgm(&a.out, &out)?;
    Ok(())
}

type Frames = Vec<(GrayImage, (usize, usize))>;

/// Manifest records and their normalized frames; relative image paths are
/// resolved against the manifest's directory.
fn load_corpus(manifest: &Path) -> Result<(Vec<SampleRecord>, Frames)> {
    let records = load_manifest(manifest)?;
    if records.is_empty() {
        bail!(invalid(format!("manifest {} has no samples", manifest.display())));
    }
    let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let frames = load_frames_sized(&records, &root)?;
    Ok((records, frames))
}

fn corpus_minutiae(
    path: Option<&PathBuf>,
    records: &[SampleRecord],
    frames: &Frames,
) -> Result<Option<Vec<Vec<Minutia>>>> {
    let Some(path) = path else { return Ok(None) };
    let table = read_minutiae_csv(path)?;
    let sizes: Vec<_> = frames.iter().map(|(_, s)| *s).collect();
    Ok(Some(frame_minutiae(records, &table, &sizes)))
}

struct Extracted {
    extractor: Extractor,
    records: Vec<SampleRecord>,
    frames: Vec<GrayImage>,
    truth: Option<Vec<Vec<Minutia>>>,
    raw: EmbeddingArchive,
}

fn extract_raw(manifest: &Path, branch: Branch, minutiae: Option<&PathBuf>) -> Result<Extracted> {
    let extractor = Extractor::new(ExtractionConfig::default())?;
    let (records, sized) = load_corpus(manifest)?;
    let truth = corpus_minutiae(minutiae, &records, &sized)?;
    let frames: Vec<GrayImage> = sized.into_iter().map(|(f, _)| f).collect();
    let raw = extract_archive(&extractor, branch, &records, &frames, truth.as_deref())?;
    Ok(Extracted {
        extractor,
        records,
        frames,
        truth,
        raw,
    })
}

fn concat_archives(texture: &EmbeddingArchive, minutiae: &EmbeddingArchive) -> Result<EmbeddingArchive> {
    if texture.len() != minutiae.len() {
        bail!(invalid(format!(
            "branch archives differ in length: {} vs {}",
            texture.len(),
            minutiae.len()
        )));
    }
    let mut rows = Vec::with_capacity(texture.len());
    for (t, m) in texture.records().iter().zip(minutiae.records()) {
        if t.key != m.key {
            bail!(invalid(format!(
                "branch archives disagree at keys {} and {}",
                t.key, m.key
            )));
        }
        let tv: Vec<f64> = t.vector.iter().map(|&x| f64::from(x)).collect();
        let mv: Vec<f64> = m.vector.iter().map(|&x| f64::from(x)).collect();
        rows.push((t.key, t.sensor, concat_branches(&l2(&tv)?, &l2(&mv)?)?));
    }
    Ok(EmbeddingArchive::from_f64(texture.dim() + minutiae.dim(), rows)?)
}

/// Renormalize an f32-rounded unit vector in double precision.
fn l2(v: &[f64]) -> Result<Vec<f64>> {
    Ok(fplfix_core::embedding::l2_normalize(v)?)
}

fn reduce_to(archive: EmbeddingArchive, dim: Option<usize>) -> Result<(EmbeddingArchive, Option<ProjectionModel>)> {
    match dim {
        None => Ok((archive, None)),
        Some(n) if n == archive.dim() => Ok((archive, None)),
        Some(n) if n == 0 || n > archive.dim() => Err(invalid(format!(
            "dim {n} outside 1..={} (raw feature dimension)",
            archive.dim()
        ))),
        Some(n) => {
            let model = fit_archive_projection(&archive, n)?;
            Ok((reduce_archive(&model, &archive)?, Some(model)))
        }
    }
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let raw = match a.branch {
        Branch::Concat => {
            let (Some(t), Some(m)) = (&a.texture_archive, &a.minutiae_archive) else {
                bail!(invalid(
                    "--branch concat needs both --texture-archive and --minutiae-archive"
                ));
            };
            concat_archives(&read_archive(t)?, &read_archive(m)?)?
        }
        _ => {
            if a.texture_archive.is_some() || a.minutiae_archive.is_some() {
                bail!(invalid("branch archives are only accepted with --branch concat"));
            }
            let manifest = a.manifest.as_ref().ok_or_else(|| invalid("--manifest is required"))?;
            extract_raw(manifest, a.branch, a.minutiae.as_ref())?.raw
        }
    };
    let (archive, model) = reduce_to(raw, a.dim)?;
    ensure_parent(&a.out)?;
    write_archive(&archive, &a.out)?;
    if let Some(path) = &a.projection_out {
        match &model {
            Some(m) => {
                ensure_parent(path)?;
                write_projection(m, path)?;
            }
            None => bail!(invalid("--projection-out given but no reduction was fitted")),
        }
    }
    eprintln!("extracted {} embeddings of dimension {}", archive.len(), archive.dim());
    Ok(())
}

fn reduce(a: &ReduceArgs) -> Result<()> {
    let input = read_archive(&a.input)?;
    let (out, model) = if let Some(path) = &a.model {
        (reduce_archive(&read_projection(path)?, &input)?, None)
    } else {
        let n = a.dim.expect("clap requires --dim without --model");
        match a.method {
            ReduceMethod::Pca => {
                let (out, model) = reduce_to(input, Some(n))?;
                (out, model)
            }
            ReduceMethod::Truncate => {
                let rows = input
                    .records()
                    .iter()
                    .map(|r| {
                        let v: Vec<f64> = r.vector.iter().map(|&x| f64::from(x)).collect();
                        Ok((r.key, r.sensor, truncate(&v, n)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (EmbeddingArchive::from_f64(n, rows)?, None)
            }
        }
    };
    ensure_parent(&a.out)?;
    write_archive(&out, &a.out)?;
    if let Some(path) = &a.model_out {
        let Some(m) = model else {
            bail!(invalid("--model-out needs a fitted PCA reduction"));
        };
        ensure_parent(path)?;
        write_projection(&m, path)?;
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<()> {
    let archive = read_archive(&a.input)?;
    let scores = all_pairs_scores(&archive, a.non_mated_cap, a.seed)?;
    ensure_parent(&a.out)?;
    write_scores(&a.out, &scores)?;
    eprintln!(
        "scored {} mated and {} non-mated pairs",
        scores.mated.len(),
        scores.non_mated.len()
    );
    Ok(())
}

fn eval_verify(a: &EvalVerifyArgs) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    let report = verification_report(&scores, &a.fmr, a.det_points)?;
    write_json(&a.out, &report)?;
    let det_path = a.det_out.clone().unwrap_or_else(|| a.out.with_file_name("det.csv"));
    let rows: Vec<Vec<String>> = report
        .det
        .iter()
        .map(|p| vec![p.fmr.to_string(), p.fnmr.to_string(), p.threshold.to_string()])
        .collect();
    write_csv(Some(&det_path), &["fmr", "fnmr", "threshold"], &rows)?;
    eprintln!("eer {}", report.eer);
    Ok(())
}

fn eval_identify(a: &EvalIdentifyArgs) -> Result<()> {
    let archive = read_archive(&a.input)?;
    let instances = archive
        .records()
        .iter()
        .map(|r| r.key.instance())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let max_rank = a.max_rank.unwrap_or(instances);
    let report = closed_set_identification(&archive, a.folds, max_rank, a.seed)?;
    let rows: Vec<Vec<String>> = (0..max_rank)
        .map(|k| {
            vec![
                (k + 1).to_string(),
                report.ranks[k].to_string(),
                report.std[k].to_string(),
            ]
        })
        .collect();
    write_csv(Some(&a.out), &["rank", "rate_mean", "rate_std"], &rows)?;
    Ok(())
}

fn perturb_grid(a: &PerturbGridArgs) -> Result<()> {
    let Extracted {
        extractor,
        records,
        frames,
        truth,
        raw,
    } = extract_raw(&a.manifest, a.branch, a.minutiae.as_ref())?;
    let (_, model) = reduce_to(raw, a.dim)?;
    let input = StudyInput {
        records: &records,
        frames: &frames,
        minutiae: truth.as_deref(),
        extractor: &extractor,
        branch: a.branch,
        projection: model.as_ref(),
    };
    let grid = perturbation_study(
        &input,
        &GridConfig {
            r_values: a.r.clone(),
            t_values: a.t.clone(),
            fmr_target: a.fmr,
            seed: a.seed,
        },
    )?;
    let mut rows = Vec::new();
    for (ti, t) in grid.t_values.iter().enumerate() {
        for (ri, r) in grid.r_values.iter().enumerate() {
            rows.push(vec![t.to_string(), r.to_string(), grid.fnmr[ti][ri].to_string()]);
        }
    }
    write_csv(Some(&a.out), &["t", "r", "fnmr"], &rows)?;
    write_json(&a.out.with_extension("json"), &grid)?;
    Ok(())
}

fn workload(a: &WorkloadArgs) -> Result<()> {
    let rows: Vec<Vec<String>> = workload_table(&a.sizes, a.baseline)?
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.ops.to_string(),
                format!("{:.4}", p.percent_of_baseline),
            ]
        })
        .collect();
    write_csv(a.out.as_deref(), &["N", "ops", "percent"], &rows)
}

fn sweep_cmd(a: &SweepArgs) -> Result<()> {
    let raw = match &a.cache {
        Some(path) if path.exists() => {
            let cached = read_archive(path)?;
            let records = load_manifest(&a.manifest)?;
            let expected = Extractor::new(ExtractionConfig::default())?.raw_dim(a.branch);
            let same_keys = cached.records().iter().map(|r| r.key).eq(records.iter().map(|r| r.key));
            if cached.dim() != expected || !same_keys {
                bail!(invalid(format!(
                    "cache {} does not match the manifest and branch",
                    path.display()
                )));
            }
            cached
        }
        cache => {
            let raw = extract_raw(&a.manifest, a.branch, a.minutiae.as_ref())?.raw;
            if let Some(path) = cache {
                ensure_parent(path)?;
                write_archive(&raw, path)?;
            }
            raw
        }
    };
    let result = sweep(&raw, &a.dims, a.fmr, a.seed)?;
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.ops.to_string(),
                r.fnmr.to_string(),
                r.eer.to_string(),
            ]
        })
        .collect();
    write_csv(Some(&a.out), &["N", "ops", "fnmr", "eer"], &rows)?;
    eprintln!(
        "sweep: {} training and {} held-out samples",
        result.train_records, result.test_records
    );
    Ok(())
}
