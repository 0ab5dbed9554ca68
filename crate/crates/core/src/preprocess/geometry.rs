use rand::Rng;

use crate::dataset_io::GrayImage;
use crate::error::{Error, Result};
use crate::seed;

/// Side of the square frame every image is normalized to.
pub const FRAME_SIZE: usize = 299;
/// Fill value for pixels mapped from outside the source frame.
pub const BACKGROUND: u8 = 255;

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Centered square crop of side `min(width, height)`.
pub fn center_crop(img: &GrayImage) -> GrayImage {
    let side = img.width().min(img.height());
    let x0 = (img.width() - side) / 2;
    let y0 = (img.height() - side) / 2;
    GrayImage::from_fn(side, side, |x, y| img.get(x0 + x, y0 + y))
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> GrayImage {
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    GrayImage::from_fn(width, height, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        to_u8(sample_bilinear(img, fx, fy).unwrap_or(f64::from(BACKGROUND)))
    })
}

/// Crop to the centered square and resample to the 299x299 frame.
pub fn crop_resize(img: &GrayImage) -> GrayImage {
    let square = center_crop(img);
    if square.width() == FRAME_SIZE {
        return square;
    }
    resize_bilinear(&square, FRAME_SIZE, FRAME_SIZE)
}

/// Position in the normalized frame of a point given in the coordinates
/// of a `width x height` source image, following [`crop_resize`].
pub fn frame_point(width: usize, height: usize, x: f64, y: f64) -> (f64, f64) {
    let side = width.min(height);
    let x0 = ((width - side) / 2) as f64;
    let y0 = ((height - side) / 2) as f64;
    if side == FRAME_SIZE {
        return (x - x0, y - y0);
    }
    let scale = side as f64 / FRAME_SIZE as f64;
    ((x - x0 + 0.5) / scale - 0.5, (y - y0 + 0.5) / scale - 0.5)
}

/// Bilinear sample at a real position, `None` outside `[0, w-1] x [0, h-1]`.
pub fn sample_bilinear(img: &GrayImage, x: f64, y: f64) -> Option<f64> {
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    if !(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y) {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let ax = x - x0 as f64;
    let ay = y - y0 as f64;
    let p = |xx, yy| f64::from(img.get(xx, yy));
    let top = p(x0, y0) + ax * (p(x1, y0) - p(x0, y0));
    let bottom = p(x0, y1) + ax * (p(x1, y1) - p(x0, y1));
    Some(top + ay * (bottom - top))
}

/// Ranges for random rotation, shift and photometric jitter. Each quantity
/// is drawn uniformly from `[-max, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentationParams {
    pub max_rotation_deg: f64,
    pub max_shift_px: f64,
    pub brightness_delta: f64,
    pub contrast_delta: f64,
    pub seed: u64,
}

impl AugmentationParams {
    /// Pure geometric perturbation, as used by the robustness study.
    pub fn geometric(max_rotation_deg: f64, max_shift_px: f64, seed: u64) -> Self {
        Self {
            max_rotation_deg,
            max_shift_px,
            brightness_delta: 0.0,
            contrast_delta: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.max_rotation_deg) || !finite_nonneg(self.max_shift_px) {
            return Err(Error::InvalidArgument(
                "rotation and shift maxima must be finite and >= 0".into(),
            ));
        }
        for (name, v) in [("brightness", self.brightness_delta), ("contrast", self.contrast_delta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} delta {v} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Draw one perturbation from these ranges using `seed`.
    pub fn draw(&self) -> Perturbation {
        let mut rng = seed::rng(self.seed);
        let mut sym = |m: f64| if m == 0.0 { 0.0 } else { rng.gen_range(-m..=m) };
        Perturbation {
            rotation_deg: sym(self.max_rotation_deg),
            dx: sym(self.max_shift_px),
            dy: sym(self.max_shift_px),
            brightness: sym(self.brightness_delta),
            contrast: sym(self.contrast_delta),
        }
    }
}

/// One concrete augmentation draw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    pub rotation_deg: f64,
    pub dx: f64,
    pub dy: f64,
    pub brightness: f64,
    pub contrast: f64,
}

impl Perturbation {
    pub fn is_identity(&self) -> bool {
        *self == Perturbation::default()
    }

    /// Forward map of a point: rotate about the image center, then shift.
    pub fn map_point(&self, width: usize, height: usize, x: f64, y: f64) -> (f64, f64) {
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let (ux, uy) = (x - cx, y - cy);
        (c * ux - s * uy + cx + self.dx, s * ux + c * uy + cy + self.dy)
    }
}

/// Rotate about the center, shift, then apply
/// `v -> (v - 128) * (1 + contrast) + 128 + brightness * 255`.
pub fn apply_perturbation(img: &GrayImage, p: &Perturbation) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (s, c) = p.rotation_deg.to_radians().sin_cos();
    let gain = 1.0 + p.contrast;
    let offset = p.brightness * 255.0;
    GrayImage::from_fn(w, h, |x, y| {
        // inverse map: output pixel -> source position
        let ux = x as f64 - cx - p.dx;
        let uy = y as f64 - cy - p.dy;
        let sx = c * ux + s * uy + cx;
        let sy = -s * ux + c * uy + cy;
        match sample_bilinear(img, sx, sy) {
            Some(v) => to_u8((v - 128.0) * gain + 128.0 + offset),
            None => BACKGROUND,
        }
    })
}

pub fn augment(img: &GrayImage, params: &AugmentationParams) -> Result<GrayImage> {
    params.validate()?;
    Ok(apply_perturbation(img, &params.draw()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 256) as u8)
    }

    #[test]
    fn crop_resize_identity_on_frame() {
        let img = ramp(299, 299);
        assert_eq!(crop_resize(&img), img);
        assert_eq!(crop_resize(&crop_resize(&img)), img);
    }

    #[test]
    fn crop_resize_constant() {
        let img = GrayImage::filled(598, 598, 77);
        let out = crop_resize(&img);
        assert_eq!((out.width(), out.height()), (299, 299));
        assert!(out.data().iter().all(|&v| v == 77));
    }

    #[test]
    fn center_crop_offsets() {
        let img = ramp(400, 300);
        let c = center_crop(&img);
        assert_eq!((c.width(), c.height()), (300, 300));
        assert_eq!(c.get(0, 0), img.get(50, 0));
        assert_eq!(c.get(299, 299), img.get(349, 299));
    }

    #[test]
    fn augment_zero_is_identity() {
        let img = ramp(64, 48);
        let p = AugmentationParams {
            max_rotation_deg: 0.0,
            max_shift_px: 0.0,
            brightness_delta: 0.0,
            contrast_delta: 0.0,
            seed: 99,
        };
        assert_eq!(augment(&img, &p).unwrap(), img);
    }

    #[test]
    fn augment_deterministic() {
        let img = ramp(64, 64);
        let p = AugmentationParams {
            max_rotation_deg: 10.0,
            max_shift_px: 4.0,
            brightness_delta: 0.1,
            contrast_delta: 0.2,
            seed: 5,
        };
        assert_eq!(augment(&img, &p).unwrap(), augment(&img, &p).unwrap());
        let other = AugmentationParams { seed: 6, ..p };
        assert_ne!(augment(&img, &p).unwrap(), augment(&img, &other).unwrap());
    }

    #[test]
    fn rounded_shift_matches_integer_shift() {
        let img = ramp(40, 30);
        let params = AugmentationParams::geometric(0.0, 3.0, 17);
        let mut p = params.draw();
        assert!(p.dx.abs() <= 3.0 && p.dy.abs() <= 3.0);
        p.dx = p.dx.round();
        p.dy = p.dy.round();
        let (dx, dy) = (p.dx as i64, p.dy as i64);
        let oracle = GrayImage::from_fn(40, 30, |x, y| {
            let (sx, sy) = (x as i64 - dx, y as i64 - dy);
            if (0..40).contains(&sx) && (0..30).contains(&sy) {
                img.get(sx as usize, sy as usize)
            } else {
                BACKGROUND
            }
        });
        assert_eq!(apply_perturbation(&img, &p), oracle);
    }

    #[test]
    fn photometric_map() {
        let img = GrayImage::new(3, 1, vec![0, 128, 200]).unwrap();
        let p = Perturbation {
            contrast: 0.5,
            brightness: 0.1,
            ..Default::default()
        };
        // (v - 128) * 1.5 + 128 + 25.5
        assert_eq!(apply_perturbation(&img, &p).data(), &[0, 154, 255]);
    }

    #[test]
    fn invalid_params() {
        let img = ramp(8, 8);
        let bad = AugmentationParams {
            contrast_delta: 1.0,
            ..AugmentationParams::geometric(0.0, 0.0, 0)
        };
        assert!(augment(&img, &bad).is_err());
        assert!(augment(&img, &AugmentationParams::geometric(f64::NAN, 0.0, 0)).is_err());
    }

    #[test]
    fn map_point_matches_image_warp() {
        let mut img = GrayImage::filled(61, 61, 200);
        img.set(40, 30, 0);
        let p = Perturbation {
            rotation_deg: 90.0,
            dx: 2.0,
            dy: -1.0,
            ..Default::default()
        };
        let (x, y) = p.map_point(61, 61, 40.0, 30.0);
        let out = apply_perturbation(&img, &p);
        assert_eq!(out.get(x.round() as usize, y.round() as usize), 0);
    }
}
