//! Geometric normalization, Gabor ridge enhancement and randomized
//! augmentation of grayscale fingerprint images.

mod enhance;
mod geometry;
mod orientation;

pub use enhance::{enhance, enhance_with_status, BlockStatus, EnhancementParams};
pub use geometry::{
    apply_perturbation, augment, center_crop, crop_resize, frame_point, resize_bilinear, sample_bilinear,
    AugmentationParams, Perturbation, BACKGROUND, FRAME_SIZE,
};
pub use orientation::{estimate_orientation_field, OrientationField};
