//! Minutiae: hot-spot map encoding, pooled embeddings, classical
//! detection, and the shared minutiae CSV format.

mod detect;
mod io;
mod map;

pub use detect::{detect_minutiae, detect_minutiae_with, skeletonize, DetectionParams};
pub use io::{read_minutiae_csv, write_minutiae_csv, MinutiaeTable};
pub use map::{
    build_minutiae_map, extract_minutiae_embedding, pool_minutiae_map, MapGeometry, MinutiaeMap, MINUTIAE_CHANNELS,
};

/// A ridge ending or bifurcation in frame coordinates. `theta` is the
/// direction in radians, `[0, 2pi)`, measured from +x towards +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Minutia {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: theta.rem_euclid(std::f64::consts::TAU),
        }
    }
}
