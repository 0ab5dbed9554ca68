use std::f64::consts::{PI, TAU};

use super::Minutia;
use crate::embedding::l2_normalize;
use crate::error::{Error, Result};

pub const MINUTIAE_CHANNELS: usize = 6;

/// Sampling of the minutiae map over the image frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapGeometry {
    /// Side of the (square) image frame in pixels.
    pub frame: usize,
    /// Side of the map in map pixels; map pixel `j` sits at frame
    /// coordinate `j * frame / resolution`.
    pub resolution: usize,
    /// Spatial spread, frame pixels.
    pub sigma_s: f64,
    /// Angular spread, radians.
    pub sigma_a: f64,
}

impl Default for MapGeometry {
    fn default() -> Self {
        Self {
            frame: crate::preprocess::FRAME_SIZE,
            resolution: 64,
            sigma_s: 3.0,
            sigma_a: TAU / 12.0,
        }
    }
}

/// Six orientation channels of non-negative hot-spot intensity, stored
/// channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MinutiaeMap {
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl MinutiaeMap {
    pub fn zeros(resolution: usize) -> Self {
        Self {
            resolution,
            values: vec![0.0; MINUTIAE_CHANNELS * resolution * resolution],
        }
    }

    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.values[(channel * self.resolution + y) * self.resolution + x]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn wrap_angle(a: f64) -> f64 {
    // into (-pi, pi]
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Per-channel angular weights of a minutia, normalized to sum to one.
pub(crate) fn angular_weights(theta: f64, sigma_a: f64) -> [f64; MINUTIAE_CHANNELS] {
    let mut w = [0.0; MINUTIAE_CHANNELS];
    for (c, wc) in w.iter_mut().enumerate() {
        let d = wrap_angle(theta - TAU * c as f64 / MINUTIAE_CHANNELS as f64);
        *wc = (-d * d / (2.0 * sigma_a * sigma_a)).exp();
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Superpose a separable spatial Gaussian times normalized angular
/// Gaussian per minutia.
pub fn build_minutiae_map(minutiae: &[Minutia], geometry: &MapGeometry) -> Result<MinutiaeMap> {
    let MapGeometry {
        frame,
        resolution,
        sigma_s,
        sigma_a,
    } = *geometry;
    if frame == 0 || resolution == 0 || !(sigma_s > 0.0) || !(sigma_a > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid map geometry {geometry:?}")));
    }
    let mut map = MinutiaeMap::zeros(resolution);
    let step = frame as f64 / resolution as f64;
    for m in minutiae {
        if !(m.x >= 0.0 && m.x < frame as f64 && m.y >= 0.0 && m.y < frame as f64) {
            return Err(Error::InvalidArgument(format!(
                "minutia ({}, {}) outside the {frame}px frame",
                m.x, m.y
            )));
        }
        let profile = |c: f64| -> Vec<f64> {
            (0..resolution)
                .map(|j| {
                    let d = j as f64 * step - c;
                    (-d * d / (2.0 * sigma_s * sigma_s)).exp()
                })
                .collect()
        };
        let gx = profile(m.x);
        let gy = profile(m.y);
        let weights = angular_weights(m.theta, sigma_a);
        for (c, &wc) in weights.iter().enumerate() {
            for (y, &wy) in gy.iter().enumerate() {
                let row = &mut map.values[(c * resolution + y) * resolution..][..resolution];
                let a = wc * wy;
                for (v, &wx) in row.iter_mut().zip(&gx) {
                    *v += a * wx;
                }
            }
        }
    }
    Ok(map)
}

/// Mean of each channel over a `grid x grid` partition, flattened
/// channel-major then row-major. Not normalized.
pub fn pool_minutiae_map(map: &MinutiaeMap, grid: usize) -> Result<Vec<f64>> {
    if grid == 0 || grid > map.resolution {
        return Err(Error::InvalidArgument(format!(
            "grid {grid} outside 1..={}",
            map.resolution
        )));
    }
    let res = map.resolution;
    let mut sums = vec![0.0; MINUTIAE_CHANNELS * grid * grid];
    let mut counts = vec![0usize; grid * grid];
    for y in 0..res {
        let cy = y * grid / res;
        for x in 0..res {
            let cx = x * grid / res;
            counts[cy * grid + cx] += 1;
        }
    }
    for c in 0..MINUTIAE_CHANNELS {
        for y in 0..res {
            let cy = y * grid / res;
            for x in 0..res {
                let cx = x * grid / res;
                sums[(c * grid + cy) * grid + cx] += map.get(c, x, y);
            }
        }
    }
    for (i, s) in sums.iter_mut().enumerate() {
        *s /= counts[i % (grid * grid)] as f64;
    }
    Ok(sums)
}

/// Pooled, L2-normalized minutiae embedding of length `6 * grid^2`.
pub fn extract_minutiae_embedding(map: &MinutiaeMap, grid: usize) -> Result<Vec<f64>> {
    if map.is_zero() {
        return Err(Error::Degenerate("empty minutiae map".into()));
    }
    l2_normalize(&pool_minutiae_map(map, grid)?)
}
