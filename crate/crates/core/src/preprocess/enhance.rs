use std::f64::consts::PI;

use super::orientation::{estimate_orientation_field, OrientationField};
use crate::dataset_io::GrayImage;
use crate::error::{Error, Result};

/// Minimum standard deviation (gray levels) of a ridge signature for its
/// peaks to count.
const MIN_SIGNATURE_STD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancementParams {
    pub block_size: usize,
    pub gabor_sigma: f64,
    /// Accepted ridge frequencies, cycles per pixel.
    pub frequency_window: (f64, f64),
    pub binarize: bool,
}

impl Default for EnhancementParams {
    fn default() -> Self {
        Self {
            block_size: 16,
            gabor_sigma: 4.0,
            frequency_window: (1.0 / 25.0, 1.0 / 3.0),
            binarize: false,
        }
    }
}

impl EnhancementParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 8 {
            return Err(Error::InvalidArgument(format!("block size {} < 8", self.block_size)));
        }
        if !(self.gabor_sigma > 0.0 && self.gabor_sigma.is_finite()) {
            return Err(Error::InvalidArgument("gabor sigma must be positive".into()));
        }
        let (lo, hi) = self.frequency_window;
        if !(lo > 0.0 && lo < hi && hi <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "frequency window [{lo}, {hi}] is empty or out of range"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockStatus {
    Filtered {
        frequency: f64,
    },
    LowCoherence,
    /// Ridge frequency could not be estimated inside the window.
    FrequencyRejected,
}

/// Estimate the ridge frequency of a block from the spacing of the peaks
/// of its oriented x-signature.
fn block_frequency(img: &GrayImage, field: &OrientationField, bx: usize, by: usize) -> Option<f64> {
    let b = field.block_size as f64;
    let theta = field.angle(bx, by);
    let (s, c) = theta.sin_cos();
    let (nx, ny) = (-s, c);
    let cx = (bx as f64 + 0.5) * b;
    let cy = (by as f64 + 0.5) * b;
    let len = 3 * field.block_size;
    let width = field.block_size;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    let sample = |x: f64, y: f64| {
        super::geometry::sample_bilinear(img, x.clamp(0.0, max_x), y.clamp(0.0, max_y)).expect("clamped inside image")
    };
    let signature: Vec<f64> = (0..len)
        .map(|k| {
            let u = k as f64 - len as f64 / 2.0;
            let mut acc = 0.0;
            for j in 0..width {
                let v = j as f64 - width as f64 / 2.0;
                acc += sample(cx + u * nx + v * c, cy + u * ny + v * s);
            }
            acc / width as f64
        })
        .collect();
    let mean = signature.iter().sum::<f64>() / len as f64;
    let std = (signature.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64).sqrt();
    if std < MIN_SIGNATURE_STD {
        return None;
    }
    let peaks: Vec<usize> = (1..len - 1)
        .filter(|&k| signature[k] > signature[k - 1] && signature[k] >= signature[k + 1] && signature[k] > mean)
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    let span = (peaks[peaks.len() - 1] - peaks[0]) as f64;
    Some((peaks.len() - 1) as f64 / span)
}

/// Zero-mean even Gabor kernel across ridges at angle `theta`, scaled so a
/// matched unit-amplitude cosine produces unit response.
fn even_gabor(theta: f64, freq: f64, sigma: f64) -> (usize, Vec<f64>) {
    let radius = (3.0 * sigma).ceil() as usize;
    let side = 2 * radius + 1;
    let (s, c) = theta.sin_cos();
    let mut carrier = Vec::with_capacity(side * side);
    let mut envelope = Vec::with_capacity(side * side);
    for dy in -(radius as isize)..=radius as isize {
        for dx in -(radius as isize)..=radius as isize {
            let (x, y) = (dx as f64, dy as f64);
            let u = -x * s + y * c;
            let g = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            envelope.push(g);
            carrier.push(g * (2.0 * PI * freq * u).cos());
        }
    }
    let dc = carrier.iter().sum::<f64>() / envelope.iter().sum::<f64>();
    let mut kernel: Vec<f64> = carrier.iter().zip(&envelope).map(|(k, g)| k - dc * g).collect();
    // response to the matched cosine cos(2 pi f u)
    let mut gain = 0.0;
    let mut i = 0;
    for dy in -(radius as isize)..=radius as isize {
        for dx in -(radius as isize)..=radius as isize {
            let u = -(dx as f64) * s + dy as f64 * c;
            gain += kernel[i] * (2.0 * PI * freq * u).cos();
            i += 1;
        }
    }
    kernel.iter_mut().for_each(|k| *k /= gain);
    (radius, kernel)
}

/// Gabor ridge enhancement, also reporting what happened to each block.
///
/// Reliable blocks with an in-window ridge frequency are filtered with an
/// even Gabor kernel tuned to the block; every other block is copied
/// through unchanged. Filtered output is centered on gray level 128.
pub fn enhance_with_status(img: &GrayImage, params: &EnhancementParams) -> Result<(GrayImage, Vec<BlockStatus>)> {
    params.validate()?;
    let field = estimate_orientation_field(img, params.block_size)?;
    let (w, h) = (img.width(), img.height());
    let (lo, hi) = params.frequency_window;

    let raw_freq: Vec<Option<f64>> = (0..field.blocks_y)
        .flat_map(|by| (0..field.blocks_x).map(move |bx| (bx, by)))
        .map(|(bx, by)| {
            if !field.is_reliable(bx, by) {
                return None;
            }
            block_frequency(img, &field, bx, by).filter(|f| (lo..=hi).contains(f))
        })
        .collect();

    let mut status = Vec::with_capacity(raw_freq.len());
    for by in 0..field.blocks_y {
        for bx in 0..field.blocks_x {
            let i = field.index(bx, by);
            if !field.reliable[i] {
                status.push(BlockStatus::LowCoherence);
                continue;
            }
            if raw_freq[i].is_none() {
                status.push(BlockStatus::FrequencyRejected);
                continue;
            }
            // average with valid neighbours
            let (mut sum, mut n) = (0.0, 0usize);
            for ny in by.saturating_sub(1)..=(by + 1).min(field.blocks_y - 1) {
                for nx in bx.saturating_sub(1)..=(bx + 1).min(field.blocks_x - 1) {
                    if let Some(f) = raw_freq[field.index(nx, ny)] {
                        sum += f;
                        n += 1;
                    }
                }
            }
            status.push(BlockStatus::Filtered {
                frequency: sum / n as f64,
            });
        }
    }

    let radius = (3.0 * params.gabor_sigma).ceil() as usize;
    let pw = w + 2 * radius;
    let padded: Vec<f64> = (0..h + 2 * radius)
        .flat_map(|py| (0..pw).map(move |px| (px, py)))
        .map(|(px, py)| {
            let x = (px as isize - radius as isize).clamp(0, w as isize - 1) as usize;
            let y = (py as isize - radius as isize).clamp(0, h as isize - 1) as usize;
            f64::from(img.get(x, y))
        })
        .collect();

    let mut out = vec![0.0f64; w * h];
    let b = params.block_size;
    for by in 0..field.blocks_y {
        for bx in 0..field.blocks_x {
            let i = field.index(bx, by);
            let (x0, y0) = (bx * b, by * b);
            let (x1, y1) = ((x0 + b).min(w), (y0 + b).min(h));
            match status[i] {
                BlockStatus::Filtered { frequency } => {
                    let (r, kernel) = even_gabor(field.angles[i], frequency, params.gabor_sigma);
                    let side = 2 * r + 1;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            let mut acc = 0.0;
                            for ky in 0..side {
                                let row = &padded[(y + ky) * pw + x..(y + ky) * pw + x + side];
                                let krow = &kernel[ky * side..(ky + 1) * side];
                                acc += row.iter().zip(krow).map(|(p, k)| p * k).sum::<f64>();
                            }
                            out[y * w + x] = 128.0 + acc;
                        }
                    }
                }
                _ => {
                    for y in y0..y1 {
                        for x in x0..x1 {
                            out[y * w + x] = f64::from(img.get(x, y));
                        }
                    }
                }
            }
        }
    }

    if params.binarize {
        for by in 0..field.blocks_y {
            for bx in 0..field.blocks_x {
                let (x0, y0) = (bx * b, by * b);
                let (x1, y1) = ((x0 + b).min(w), (y0 + b).min(h));
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                let mean = (y0..y1)
                    .flat_map(|y| (x0..x1).map(move |x| (x, y)))
                    .map(|(x, y)| out[y * w + x])
                    .sum::<f64>()
                    / n;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let v = &mut out[y * w + x];
                        *v = if *v >= mean { 255.0 } else { 0.0 };
                    }
                }
            }
        }
    }

    let data = out.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Ok((GrayImage::new(w, h, data)?, status))
}

pub fn enhance(img: &GrayImage, params: &EnhancementParams) -> Result<GrayImage> {
    enhance_with_status(img, params).map(|(img, _)| img)
}
