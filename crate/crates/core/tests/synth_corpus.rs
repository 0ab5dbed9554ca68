//! Corpus writing and reloading.

use fplfix_core::dataset_io::load_manifest;
use fplfix_core::minutiae::read_minutiae_csv;
use fplfix_core::pipeline::load_frames;
use fplfix_core::synthgen::{generate_corpus, SynthConfig};

#[test]
fn written_corpus_reloads_identically() {
    let cfg = SynthConfig::new(3, 2, 77);
    let corpus = generate_corpus(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write(dir.path()).unwrap();

    let records = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    assert_eq!(records, corpus.records());
    let frames = load_frames(&records, dir.path()).unwrap();
    for (f, s) in frames.iter().zip(&corpus.samples) {
        assert_eq!(f, &s.image);
    }
    let table = read_minutiae_csv(&dir.path().join("minutiae.csv")).unwrap();
    for s in &corpus.samples {
        let back = &table[&s.record.key];
        assert_eq!(back.len(), s.minutiae.len());
        for (a, b) in back.iter().zip(&s.minutiae) {
            assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
            assert!((a.theta - b.theta).abs() < 1e-9);
        }
    }
    // regeneration is bit-identical
    assert_eq!(generate_corpus(&cfg).unwrap(), corpus);
}
