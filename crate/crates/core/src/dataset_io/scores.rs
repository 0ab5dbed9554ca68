use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::SampleKey;
use crate::comparator::{ScorePair, ScoreSet};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Row {
    probe_key: String,
    gallery_key: String,
    mated: u8,
    score: f64,
}

/// Write a score file: mated rows first, then non-mated, each in set order.
/// Scores use the shortest decimal form that round-trips.
pub fn write_scores(path: &Path, scores: &ScoreSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let rows = scores
        .mated
        .iter()
        .map(|p| (p, 1u8))
        .chain(scores.non_mated.iter().map(|p| (p, 0u8)));
    for (p, mated) in rows {
        w.serialize(Row {
            probe_key: p.probe.to_string(),
            gallery_key: p.reference.to_string(),
            mated,
            score: p.score,
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<ScoreSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut set = ScoreSet::default();
    for (idx, row) in r.deserialize::<Row>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| Error::Format(format!("score row {line}: {e}")))?;
        if !(-1.0..=1.0).contains(&row.score) {
            return Err(Error::Format(format!(
                "score row {line}: score {} outside [-1, 1]",
                row.score
            )));
        }
        let pair = ScorePair {
            probe: row.probe_key.parse::<SampleKey>()?,
            reference: row.gallery_key.parse::<SampleKey>()?,
            score: row.score,
        };
        match row.mated {
            1 => set.mated.push(pair),
            0 => set.non_mated.push(pair),
            m => {
                return Err(Error::Format(format!(
                    "score row {line}: mated must be 0 or 1, got {m}"
                )))
            }
        }
    }
    Ok(set)
}
