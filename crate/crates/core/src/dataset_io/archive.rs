use std::io::{BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::manifest::{SampleKey, Sensor};
use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"FPEB";
const ARCHIVE_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;
const RECORD_PREFIX_LEN: usize = 4 + 2 + 2 + 1 + 3;
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub key: SampleKey,
    pub sensor: Sensor,
    pub vector: Vec<f32>,
}

/// A set of unit-norm embeddings of one fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingArchive {
    dim: usize,
    records: Vec<EmbeddingRecord>,
}

fn norm_f32(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

impl EmbeddingArchive {
    pub fn new(dim: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!("archive dim {dim} out of range")));
        }
        for r in &records {
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.vector.len(),
                });
            }
            let n = norm_f32(&r.vector);
            if (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Contract(format!("embedding {} has norm {n}, expected 1", r.key)));
            }
        }
        Ok(Self { dim, records })
    }

    /// Build an archive from double-precision unit vectors, rounding to f32.
    pub fn from_f64(dim: usize, rows: Vec<(SampleKey, Sensor, Vec<f64>)>) -> Result<Self> {
        let records = rows
            .into_iter()
            .map(|(key, sensor, v)| EmbeddingRecord {
                key,
                sensor,
                vector: v.into_iter().map(|x| x as f32).collect(),
            })
            .collect();
        Self::new(dim, records)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn vectors_f64(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.vector.iter().map(|&x| f64::from(x)).collect())
            .collect()
    }

    /// Size in bytes of the serialized archive.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.records.len() * (RECORD_PREFIX_LEN + 4 * self.dim)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode(&mut out).expect("writing to Vec cannot fail");
        out
    }

    fn encode<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(ARCHIVE_MAGIC)?;
        w.write_u16::<LittleEndian>(ARCHIVE_VERSION)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u64::<LittleEndian>(self.records.len() as u64)?;
        for r in &self.records {
            w.write_u32::<LittleEndian>(r.key.subject)?;
            w.write_u16::<LittleEndian>(r.key.finger)?;
            w.write_u16::<LittleEndian>(r.key.sample)?;
            w.write_u8(r.sensor.code())?;
            w.write_all(&[0u8; 3])?;
            for &x in &r.vector {
                w.write_f32::<LittleEndian>(x)?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("archive shorter than header".into()));
        }
        if &bytes[..4] != ARCHIVE_MAGIC {
            return Err(Error::Format("bad archive magic".into()));
        }
        let mut c = Cursor::new(&bytes[4..]);
        let eof = |_| Error::Format("truncated archive".into());
        let version = c.read_u16::<LittleEndian>().map_err(eof)?;
        if version != ARCHIVE_VERSION {
            return Err(Error::Format(format!(
                "archive version {version} unsupported (expected {ARCHIVE_VERSION})"
            )));
        }
        let dim = c.read_u32::<LittleEndian>().map_err(eof)? as usize;
        let count = c.read_u64::<LittleEndian>().map_err(eof)?;
        let payload = (bytes.len() - HEADER_LEN) as u128;
        let expected = u128::from(count) * (RECORD_PREFIX_LEN + 4 * dim) as u128;
        if payload != expected {
            return Err(Error::Format(format!(
                "payload is {payload} bytes but dim {dim} and count {count} require {expected}"
            )));
        }
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let subject = c.read_u32::<LittleEndian>().map_err(eof)?;
            let finger = c.read_u16::<LittleEndian>().map_err(eof)?;
            let sample = c.read_u16::<LittleEndian>().map_err(eof)?;
            let code = c.read_u8().map_err(eof)?;
            let sensor = Sensor::from_code(code).ok_or_else(|| Error::Format(format!("unknown sensor code {code}")))?;
            let mut pad = [0u8; 3];
            c.read_exact(&mut pad).map_err(eof)?;
            let mut vector = vec![0f32; dim];
            c.read_f32_into::<LittleEndian>(&mut vector).map_err(eof)?;
            records.push(EmbeddingRecord {
                key: SampleKey::new(subject, finger, sample),
                sensor,
                vector,
            });
        }
        Self::new(dim, records).map_err(|e| match e {
            Error::Contract(m) => Error::Format(m),
            other => other,
        })
    }
}

pub fn write_archive(archive: &EmbeddingArchive, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    archive
        .encode(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path) -> Result<EmbeddingArchive> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingArchive::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, hot: usize) -> Vec<f32> {
        let mut v = vec![0.0; dim];
        v[hot] = 1.0;
        v
    }

    #[test]
    fn single_record_round_trip() {
        let a = EmbeddingArchive::new(
            512,
            vec![EmbeddingRecord {
                key: SampleKey::new(3, 1, 4),
                sensor: Sensor::Capacitive,
                vector: unit(512, 7),
            }],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.fpeb");
        write_archive(&a, &p).unwrap();
        let raw = std::fs::read(&p).unwrap();
        assert_eq!(raw.len(), 18 + 12 + 512 * 4);
        assert_eq!(&raw[..4], b"FPEB");
        assert_eq!(read_archive(&p).unwrap(), a);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = EmbeddingArchive::new(2, vec![]).unwrap().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(EmbeddingArchive::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = EmbeddingArchive::new(2, vec![]).unwrap().to_bytes();
        bytes[4] = 2;
        assert!(matches!(EmbeddingArchive::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn payload_inconsistent_with_header() {
        let a = EmbeddingArchive::new(
            2,
            vec![EmbeddingRecord {
                key: SampleKey::new(0, 0, 0),
                sensor: Sensor::Optical,
                vector: unit(2, 0),
            }],
        )
        .unwrap();
        let mut bytes = a.to_bytes();
        bytes.pop();
        assert!(matches!(EmbeddingArchive::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn rejects_non_unit_vectors() {
        let r = EmbeddingRecord {
            key: SampleKey::new(0, 0, 0),
            sensor: Sensor::Optical,
            vector: vec![0.5, 0.5],
        };
        assert!(EmbeddingArchive::new(2, vec![r]).is_err());
    }

    #[test]
    fn table_scale_payload_size() {
        // 15,600 records of dim 512: 18-byte header + 15,600 * (12 + 2048)
        let records = (0..15_600u32)
            .map(|i| EmbeddingRecord {
                key: SampleKey::new(i / 120, ((i / 12) % 10) as u16, (i % 12) as u16),
                sensor: Sensor::Optical,
                vector: unit(512, (i % 512) as usize),
            })
            .collect();
        let a = EmbeddingArchive::new(512, records).unwrap();
        assert_eq!(a.encoded_len(), 18 + 15_600 * 12 + 15_600 * 512 * 4);
        assert_eq!(a.to_bytes().len(), a.encoded_len());
    }
}
