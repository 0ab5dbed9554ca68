//! Fixed-length fingerprint embeddings and their evaluation.
//!
//! The crate covers the whole desk-scale pipeline: synthetic ridge images,
//! Gabor enhancement, texture and minutiae embeddings, cosine comparison
//! with operation accounting, verification and identification metrics,
//! and the rotation/translation robustness study.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparator;
pub mod dataset_io;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod minutiae;
pub mod pipeline;
pub mod preprocess;
pub mod robustness;
pub mod seed;
pub mod synthgen;
pub mod texture;

pub use error::{Error, Result};
