use std::f64::consts::PI;

use crate::dataset_io::GrayImage;
use crate::error::{Error, Result};

/// Blocks with gradient coherence below this are not trusted.
const MIN_COHERENCE: f64 = 0.2;
/// Mean squared gradient below which a block counts as flat.
const MIN_ENERGY: f64 = 1e-6;

/// Per-block ridge orientation in `[0, pi)`, measured from the +x axis
/// towards +y in image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub block_size: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub angles: Vec<f64>,
    pub coherence: Vec<f64>,
    pub reliable: Vec<bool>,
}

impl OrientationField {
    pub fn index(&self, bx: usize, by: usize) -> usize {
        by * self.blocks_x + bx
    }

    pub fn angle(&self, bx: usize, by: usize) -> f64 {
        self.angles[self.index(bx, by)]
    }

    pub fn is_reliable(&self, bx: usize, by: usize) -> bool {
        self.reliable[self.index(bx, by)]
    }

    /// Orientation of the block containing pixel `(x, y)`.
    pub fn at_pixel(&self, x: usize, y: usize) -> (f64, bool) {
        let i = self.index(
            (x / self.block_size).min(self.blocks_x - 1),
            (y / self.block_size).min(self.blocks_y - 1),
        );
        (self.angles[i], self.reliable[i])
    }
}

/// Sobel gradients with clamped borders.
pub(crate) fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let px = |x: isize, y: isize| {
        let xx = x.clamp(0, w as isize - 1) as usize;
        let yy = y.clamp(0, h as isize - 1) as usize;
        f64::from(img.get(xx, yy))
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            gy[i] = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Dominant ridge orientation per block from the gradient covariance over
/// the block widened by half a block on each side.
pub fn estimate_orientation_field(img: &GrayImage, block_size: usize) -> Result<OrientationField> {
    if block_size == 0 || img.width() < block_size || img.height() < block_size {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} smaller than one {block_size}px block",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let (gx, gy) = sobel(img);
    let blocks_x = w.div_ceil(block_size);
    let blocks_y = h.div_ceil(block_size);
    let half = block_size / 2;

    let mut angles = Vec::with_capacity(blocks_x * blocks_y);
    let mut coherence = Vec::with_capacity(blocks_x * blocks_y);
    let mut reliable = Vec::with_capacity(blocks_x * blocks_y);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let x0 = (bx * block_size).saturating_sub(half);
            let y0 = (by * block_size).saturating_sub(half);
            let x1 = ((bx + 1) * block_size + half).min(w);
            let y1 = ((by + 1) * block_size + half).min(h);
            let (mut gxx, mut gyy, mut gxy) = (0.0, 0.0, 0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let i = y * w + x;
                    gxx += gx[i] * gx[i];
                    gyy += gy[i] * gy[i];
                    gxy += gx[i] * gy[i];
                }
            }
            let count = ((x1 - x0) * (y1 - y0)) as f64;
            let energy = (gxx + gyy) / count;
            if energy <= MIN_ENERGY {
                angles.push(0.0);
                coherence.push(0.0);
                reliable.push(false);
                continue;
            }
            let coh = ((gxx - gyy).powi(2) + 4.0 * gxy * gxy).sqrt() / (gxx + gyy);
            let theta = (0.5 * (2.0 * gxy).atan2(gxx - gyy) + PI / 2.0).rem_euclid(PI);
            angles.push(if theta >= PI { 0.0 } else { theta });
            coherence.push(coh);
            reliable.push(coh >= MIN_COHERENCE);
        }
    }
    Ok(OrientationField {
        block_size,
        blocks_x,
        blocks_y,
        angles,
        coherence,
        reliable,
    })
}
