use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HEADER: [&str; 5] = ["image_path", "subject_id", "finger_id", "sample_id", "sensor"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    Optical,
    Capacitive,
    Synthetic,
}

impl Sensor {
    pub fn code(self) -> u8 {
        match self {
            Sensor::Optical => 0,
            Sensor::Capacitive => 1,
            Sensor::Synthetic => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Sensor::Optical),
            1 => Some(Sensor::Capacitive),
            2 => Some(Sensor::Synthetic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sensor::Optical => "optical",
            Sensor::Capacitive => "capacitive",
            Sensor::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Sensor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optical" => Ok(Sensor::Optical),
            "capacitive" => Ok(Sensor::Capacitive),
            "synthetic" => Ok(Sensor::Synthetic),
            other => Err(Error::Format(format!("unknown sensor '{other}'"))),
        }
    }
}

/// A biometric instance: one finger of one subject. Every instance is its
/// own identity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceId {
    pub subject: u32,
    pub finger: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleKey {
    pub subject: u32,
    pub finger: u16,
    pub sample: u16,
}

impl SampleKey {
    pub fn new(subject: u32, finger: u16, sample: u16) -> Self {
        Self {
            subject,
            finger,
            sample,
        }
    }

    pub fn instance(&self) -> InstanceId {
        InstanceId {
            subject: self.subject,
            finger: self.finger,
        }
    }
}

impl fmt::Display for SampleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.subject, self.finger, self.sample)
    }
}

impl FromStr for SampleKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed sample key '{s}'"));
        let mut parts = s.split('-');
        let subject = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let finger = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let sample = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(SampleKey::new(subject, finger, sample))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub image_path: PathBuf,
    pub key: SampleKey,
    pub sensor: Sensor,
}

impl SampleRecord {
    pub fn instance(&self) -> InstanceId {
        self.key.instance()
    }
}

#[derive(Deserialize)]
struct Row {
    image_path: String,
    subject_id: u32,
    finger_id: u16,
    sample_id: u16,
    sensor: Sensor,
}

/// Load a manifest CSV. Records come back in file order; image paths are
/// returned as written (relative paths are relative to the manifest).
pub fn load_manifest(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().map(str::trim).ne(HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "{}: expected header '{}'",
            path.display(),
            HEADER.join(",")
        )));
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, row) in reader.deserialize::<Row>().enumerate() {
        // header is line 1
        let line = idx + 2;
        let row = row.map_err(|e| Error::ManifestRow {
            row: line,
            message: e.to_string(),
        })?;
        if row.finger_id > 9 {
            return Err(Error::ManifestRow {
                row: line,
                message: format!("finger_id {} outside 0..9", row.finger_id),
            });
        }
        let key = SampleKey::new(row.subject_id, row.finger_id, row.sample_id);
        if !seen.insert(key) {
            return Err(Error::DuplicateKey(format!("{key} (row {line})")));
        }
        records.push(SampleRecord {
            image_path: PathBuf::from(row.image_path),
            key,
            sensor: row.sensor,
        });
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let map = |e: csv::Error| Error::Format(e.to_string());
    writer.write_record(HEADER).map_err(map)?;
    for r in records {
        writer
            .write_record([
                r.image_path.to_string_lossy().as_ref(),
                &r.key.subject.to_string(),
                &r.key.finger.to_string(),
                &r.key.sample.to_string(),
                r.sensor.as_str(),
            ])
            .map_err(map)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_only_is_empty() {
        let f = write("image_path,subject_id,finger_id,sample_id,sensor\n");
        assert!(load_manifest(f.path()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_key_rejected() {
        let f = write(
            "image_path,subject_id,finger_id,sample_id,sensor\n\
             a.pgm,0,0,0,optical\n\
             b.pgm,0,0,0,optical\n",
        );
        assert!(matches!(load_manifest(f.path()), Err(Error::DuplicateKey(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write(
            "image_path,subject_id,finger_id,sample_id,sensor\n\
             a.pgm,0,0,0,optical\n\
             b.pgm,zero,0,1,optical\n",
        );
        match load_manifest(f.path()) {
            Err(Error::ManifestRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_sensor_and_finger_rejected() {
        let f = write("image_path,subject_id,finger_id,sample_id,sensor\na.pgm,0,0,0,thermal\n");
        assert!(matches!(
            load_manifest(f.path()),
            Err(Error::ManifestRow { row: 2, .. })
        ));
        let f = write("image_path,subject_id,finger_id,sample_id,sensor\na.pgm,0,10,0,optical\n");
        assert!(matches!(
            load_manifest(f.path()),
            Err(Error::ManifestRow { row: 2, .. })
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_manifest(Path::new("/nonexistent/manifest.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn table_shaped_manifest_round_trips() {
        let mut records = Vec::new();
        for subject in 0..130u32 {
            for finger in 0..10u16 {
                for sample in 0..12u16 {
                    records.push(SampleRecord {
                        image_path: PathBuf::from(format!("img/{subject}_{finger}_{sample}.pgm")),
                        key: SampleKey::new(subject, finger, sample),
                        sensor: Sensor::Optical,
                    });
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_manifest(&path, &records).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.len(), 15_600);
        assert_eq!(loaded, records);
    }

    #[test]
    fn sample_key_text_round_trip() {
        let k = SampleKey::new(12, 3, 7);
        assert_eq!(k.to_string().parse::<SampleKey>().unwrap(), k);
        assert!("1-2".parse::<SampleKey>().is_err());
    }
}
