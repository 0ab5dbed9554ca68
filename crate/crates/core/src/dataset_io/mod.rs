//! Dataset plumbing: manifests, grayscale images, embedding archives and
//! score files.

mod archive;
mod image;
mod manifest;
mod scores;

pub use archive::{read_archive, write_archive, EmbeddingArchive, EmbeddingRecord, ARCHIVE_MAGIC};
pub use image::{load_image, write_pgm, GrayImage};
pub use manifest::{load_manifest, write_manifest, InstanceId, SampleKey, SampleRecord, Sensor};
pub use scores::{read_scores, write_scores};
