//! Deterministic synthetic ridge-pattern corpus with ground-truth minutiae.
//!
//! Each identity is a phase field: a carrier blending a straight wave with
//! a concentric one around a core point, bent by a few low-frequency
//! waves, plus one spiral phase term per minutia. Every spiral places
//! exactly one ridge ending or bifurcation at its center. Samples render
//! the field under a small random rotation, shift and contrast change and
//! add Gaussian noise.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dataset_io::{write_manifest, write_pgm, GrayImage, InstanceId, SampleKey, SampleRecord, Sensor};
use crate::error::{Error, Result};
use crate::minutiae::{write_minutiae_csv, Minutia, MinutiaeTable};
use crate::preprocess::{Perturbation, FRAME_SIZE};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub identities: usize,
    pub samples_per_identity: usize,
    pub master_seed: u64,
    pub size: usize,
    pub max_rotation_deg: f64,
    pub max_shift_px: f64,
    pub contrast_delta: f64,
    pub noise_std: f64,
}

impl SynthConfig {
    pub fn new(identities: usize, samples_per_identity: usize, master_seed: u64) -> Self {
        Self {
            identities,
            samples_per_identity,
            master_seed,
            size: FRAME_SIZE,
            max_rotation_deg: 5.0,
            max_shift_px: 5.0,
            contrast_delta: 0.1,
            noise_std: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    kx: f64,
    ky: f64,
    amplitude: f64,
    phase: f64,
}

/// A minutia planted as a spiral phase singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedMinutia {
    pub x: f64,
    pub y: f64,
    /// Winding of the spiral term, +1 or -1.
    pub polarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthIdentity {
    pub instance: InstanceId,
    pub orientation_field_seed: u64,
    /// Cycles per pixel, in `[1/12, 1/6]`.
    pub ridge_frequency: f64,
    pub core_position: (f64, f64),
    carrier_angle: f64,
    core_weight: f64,
    phase_offset: f64,
    waves: Vec<Wave>,
    pub planted: Vec<PlantedMinutia>,
    /// Ground truth in the identity's reference pose.
    pub minutiae_truth: Vec<Minutia>,
}

const MINUTIA_MARGIN: f64 = 24.0;
const MINUTIA_SPACING: f64 = 28.0;

impl SynthIdentity {
    fn generate(instance: InstanceId, field_seed: u64, size: usize) -> Self {
        let mut rng = seed::rng(field_seed);
        let s = size as f64;
        let ridge_frequency = rng.gen_range(1.0 / 12.0..=1.0 / 6.0);
        let carrier_angle = rng.gen_range(0.0..PI);
        let core_position = (rng.gen_range(0.3 * s..0.7 * s), rng.gen_range(0.3 * s..0.7 * s));
        let core_weight = rng.gen_range(0.15..0.35);
        let phase_offset = rng.gen_range(0.0..TAU);
        let waves = (0..3)
            .map(|_| {
                let dir = rng.gen_range(0.0..TAU);
                let k = TAU / rng.gen_range(120.0..240.0);
                Wave {
                    kx: k * dir.cos(),
                    ky: k * dir.sin(),
                    amplitude: rng.gen_range(2.0..6.0),
                    phase: rng.gen_range(0.0..TAU),
                }
            })
            .collect();
        let planted = poisson_disk(&mut rng, s);
        let mut id = Self {
            instance,
            orientation_field_seed: field_seed,
            ridge_frequency,
            core_position,
            carrier_angle,
            core_weight,
            phase_offset,
            waves,
            planted,
            minutiae_truth: Vec::new(),
        };
        id.minutiae_truth = id
            .planted
            .iter()
            .enumerate()
            .map(|(i, m)| Minutia::new(m.x, m.y, id.minutia_direction(i)))
            .collect();
        id
    }

    /// Smooth part of the phase and its gradient.
    fn smooth_phase(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (s, c) = self.carrier_angle.sin_cos();
        let (dx, dy) = (x - self.core_position.0, y - self.core_position.1);
        let r = dx.hypot(dy).max(1e-9);
        let w = self.core_weight;
        let mut psi = (1.0 - w) * (x * c + y * s) + w * r;
        let mut gx = (1.0 - w) * c + w * dx / r;
        let mut gy = (1.0 - w) * s + w * dy / r;
        for wave in &self.waves {
            let arg = wave.kx * x + wave.ky * y + wave.phase;
            psi += wave.amplitude * arg.sin();
            gx += wave.amplitude * wave.kx * arg.cos();
            gy += wave.amplitude * wave.ky * arg.cos();
        }
        let k = TAU * self.ridge_frequency;
        (k * psi + self.phase_offset, k * gx, k * gy)
    }

    pub fn phase(&self, x: f64, y: f64) -> f64 {
        let mut phi = self.smooth_phase(x, y).0;
        for m in &self.planted {
            phi += m.polarity * (y - m.y).atan2(x - m.x);
        }
        phi
    }

    /// Direction of planted minutia `i`: perpendicular to the phase
    /// gradient left after removing its own spiral, turned towards the
    /// side that carries one ridge fewer.
    fn minutia_direction(&self, i: usize) -> f64 {
        let m = self.planted[i];
        let (_, mut gx, mut gy) = self.smooth_phase(m.x, m.y);
        for (j, o) in self.planted.iter().enumerate() {
            if j != i {
                let (dx, dy) = (m.x - o.x, m.y - o.y);
                let r2 = dx * dx + dy * dy;
                gx += o.polarity * -dy / r2;
                gy += o.polarity * dx / r2;
            }
        }
        (m.polarity * gx).atan2(-m.polarity * gy)
    }
}

fn poisson_disk(rng: &mut ChaCha8Rng, size: f64) -> Vec<PlantedMinutia> {
    let target = rng.gen_range(8..=16);
    let mut out: Vec<PlantedMinutia> = Vec::with_capacity(target);
    let (lo, hi) = (MINUTIA_MARGIN, size - MINUTIA_MARGIN);
    for _ in 0..2000 {
        if out.len() == target {
            break;
        }
        let (x, y) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        if out.iter().all(|m| (m.x - x).hypot(m.y - y) >= MINUTIA_SPACING) {
            let polarity = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            out.push(PlantedMinutia { x, y, polarity });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub record: SampleRecord,
    pub image: GrayImage,
    pub perturbation: Perturbation,
    /// Ground-truth minutiae in this sample's pose, inside the frame.
    pub minutiae: Vec<Minutia>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub identities: Vec<SynthIdentity>,
    pub samples: Vec<SynthSample>,
}

impl SynthCorpus {
    pub fn records(&self) -> Vec<SampleRecord> {
        self.samples.iter().map(|s| s.record.clone()).collect()
    }

    pub fn minutiae_table(&self) -> MinutiaeTable {
        self.samples
            .iter()
            .map(|s| (s.record.key, s.minutiae.clone()))
            .collect()
    }

    /// Write `images/*.pgm`, `manifest.csv` and `minutiae.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let images = dir.join("images");
        std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
        for s in &self.samples {
            write_pgm(&dir.join(&s.record.image_path), &s.image)?;
        }
        write_manifest(&dir.join("manifest.csv"), &self.records())?;
        write_minutiae_csv(&dir.join("minutiae.csv"), &self.minutiae_table())
    }
}

/// Identity `index` maps to subject `index / 10`, finger `index % 10`.
pub fn instance_for(index: usize) -> InstanceId {
    InstanceId {
        subject: (index / 10) as u32,
        finger: (index % 10) as u16,
    }
}

fn render_sample(id: &SynthIdentity, sample: u16, cfg: &SynthConfig) -> SynthSample {
    let sample_seed = seed::derive(id.orientation_field_seed, u64::from(sample));
    let mut rng = seed::rng(sample_seed);
    let perturbation = Perturbation {
        rotation_deg: rng.gen_range(-cfg.max_rotation_deg..=cfg.max_rotation_deg),
        dx: rng.gen_range(-cfg.max_shift_px..=cfg.max_shift_px),
        dy: rng.gen_range(-cfg.max_shift_px..=cfg.max_shift_px),
        brightness: 0.0,
        contrast: rng.gen_range(-cfg.contrast_delta..=cfg.contrast_delta),
    };
    let noise = Normal::new(0.0, cfg.noise_std.max(f64::MIN_POSITIVE)).expect("finite std");
    let n = cfg.size;
    let center = (n as f64 - 1.0) / 2.0;
    let (s, c) = perturbation.rotation_deg.to_radians().sin_cos();
    let amplitude = 90.0 * (1.0 + perturbation.contrast);
    let image = GrayImage::from_fn(n, n, |x, y| {
        // inverse pose: output pixel -> reference pose
        let ux = x as f64 - center - perturbation.dx;
        let uy = y as f64 - center - perturbation.dy;
        let rx = c * ux + s * uy + center;
        let ry = -s * ux + c * uy + center;
        let v = 128.0 - amplitude * id.phase(rx, ry).cos() + noise.sample(&mut rng);
        v.round().clamp(0.0, 255.0) as u8
    });
    let minutiae = id
        .minutiae_truth
        .iter()
        .filter_map(|m| {
            let (x, y) = perturbation.map_point(n, n, m.x, m.y);
            (x >= 0.0 && y >= 0.0 && x < n as f64 && y < n as f64)
                .then(|| Minutia::new(x, y, m.theta + perturbation.rotation_deg.to_radians()))
        })
        .collect();
    let key = SampleKey::new(id.instance.subject, id.instance.finger, sample);
    SynthSample {
        record: SampleRecord {
            image_path: PathBuf::from(format!("images/{}_{}_{}.pgm", key.subject, key.finger, key.sample)),
            key,
            sensor: Sensor::Synthetic,
        },
        image,
        perturbation,
        minutiae,
    }
}

/// Generate a corpus; a pure function of the configuration.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.identities == 0 || cfg.samples_per_identity < 2 {
        return Err(Error::InvalidArgument(format!(
            "need >= 1 identity and >= 2 samples per identity, got {} x {}",
            cfg.identities, cfg.samples_per_identity
        )));
    }
    if cfg.samples_per_identity > usize::from(u16::MAX) || cfg.identities / 10 > u32::MAX as usize {
        return Err(Error::InvalidArgument("corpus too large for sample keys".into()));
    }
    if cfg.size < 2 * MINUTIA_MARGIN as usize + 1 {
        return Err(Error::InvalidArgument(format!("image size {} too small", cfg.size)));
    }
    let per_identity: Vec<(SynthIdentity, Vec<SynthSample>)> = (0..cfg.identities)
        .into_par_iter()
        .map(|i| {
            let id = SynthIdentity::generate(instance_for(i), seed::derive(cfg.master_seed, i as u64), cfg.size);
            let samples = (0..cfg.samples_per_identity as u16)
                .map(|k| render_sample(&id, k, cfg))
                .collect();
            (id, samples)
        })
        .collect();
    let mut identities = Vec::with_capacity(cfg.identities);
    let mut samples = Vec::with_capacity(cfg.identities * cfg.samples_per_identity);
    for (id, s) in per_identity {
        identities.push(id);
        samples.extend(s);
    }
    Ok(SynthCorpus { identities, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_keys() {
        let c = generate_corpus(&SynthConfig::new(12, 3, 1)).unwrap();
        assert_eq!(c.samples.len(), 36);
        assert_eq!(c.samples[35].record.key, SampleKey::new(1, 1, 2));
        assert!(c.samples.iter().all(|s| s.image.width() == 299));
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::new(3, 2, 42);
        assert_eq!(generate_corpus(&cfg).unwrap(), generate_corpus(&cfg).unwrap());
        let other = SynthConfig::new(3, 2, 43);
        assert_ne!(
            generate_corpus(&cfg).unwrap().samples[0].image,
            generate_corpus(&other).unwrap().samples[0].image
        );
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(generate_corpus(&SynthConfig::new(0, 2, 0)).is_err());
        assert!(generate_corpus(&SynthConfig::new(1, 1, 0)).is_err());
    }

    #[test]
    fn ground_truth_in_bounds_and_nonempty() {
        let c = generate_corpus(&SynthConfig::new(20, 2, 9)).unwrap();
        for id in &c.identities {
            assert!(!id.minutiae_truth.is_empty());
            assert!((1.0 / 12.0..=1.0 / 6.0).contains(&id.ridge_frequency));
        }
        for s in &c.samples {
            assert!(s
                .minutiae
                .iter()
                .all(|m| m.x >= 0.0 && m.y >= 0.0 && m.x < 299.0 && m.y < 299.0));
        }
        let mut seeds: Vec<u64> = c.identities.iter().map(|i| i.orientation_field_seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 20);
    }

    #[test]
    fn phase_winds_around_each_minutia() {
        let c = generate_corpus(&SynthConfig::new(1, 2, 5)).unwrap();
        let id = &c.identities[0];
        let m = id.planted[0];
        // unwrap the phase around a small loop; net winding = polarity * 2pi
        let steps = 400;
        let mut total = 0.0;
        let mut prev = id.phase(m.x + 2.0, m.y);
        for k in 1..=steps {
            let a = TAU * k as f64 / steps as f64;
            let cur = id.phase(m.x + 2.0 * a.cos(), m.y + 2.0 * a.sin());
            total += (cur - prev + PI).rem_euclid(TAU) - PI;
            prev = cur;
        }
        assert!((total - m.polarity * TAU).abs() < 1e-6, "{total}");
    }
}
