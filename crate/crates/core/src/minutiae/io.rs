use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Minutia;
use crate::dataset_io::SampleKey;
use crate::error::{Error, Result};

/// Minutiae per sample, keyed in sample-key order.
pub type MinutiaeTable = BTreeMap<SampleKey, Vec<Minutia>>;

#[derive(Serialize, Deserialize)]
struct Row {
    subject_id: u32,
    finger_id: u16,
    sample_id: u16,
    x: f64,
    y: f64,
    theta_deg: f64,
}

pub fn write_minutiae_csv(path: &Path, table: &MinutiaeTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    // keep the header even for an empty table
    w.write_record(["subject_id", "finger_id", "sample_id", "x", "y", "theta_deg"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for (key, list) in table {
        for m in list {
            w.write_record([
                key.subject.to_string(),
                key.finger.to_string(),
                key.sample.to_string(),
                m.x.to_string(),
                m.y.to_string(),
                m.theta.to_degrees().to_string(),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_minutiae_csv(path: &Path) -> Result<MinutiaeTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut table = MinutiaeTable::new();
    for (idx, row) in r.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("minutiae row {}: {e}", idx + 2)))?;
        table
            .entry(SampleKey::new(row.subject_id, row.finger_id, row.sample_id))
            .or_default()
            .push(Minutia::new(row.x, row.y, row.theta_deg.to_radians()));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = MinutiaeTable::new();
        t.insert(
            SampleKey::new(1, 2, 3),
            vec![Minutia::new(10.5, 20.25, 1.0), Minutia::new(0.0, 298.0, 6.0)],
        );
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_minutiae_csv(&p, &t).unwrap();
        let back = read_minutiae_csv(&p).unwrap();
        let (a, b) = (&t[&SampleKey::new(1, 2, 3)], &back[&SampleKey::new(1, 2, 3)]);
        for (m, n) in a.iter().zip(b) {
            assert_eq!((m.x, m.y), (n.x, n.y));
            assert!((m.theta - n.theta).abs() < 1e-12);
        }
    }
}
