use std::f64::consts::{PI, TAU};

use fplfix_core::minutiae::{detect_minutiae, Minutia};
use fplfix_core::preprocess::{enhance, EnhancementParams};
use fplfix_core::synthgen::{generate_corpus, SynthConfig};

fn angle_diff(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(TAU) - PI).abs()
}

/// Greedy nearest matching: returns (matched, matched with direction agreement).
fn greedy_match(truth: &[Minutia], found: &[Minutia], max_dist: f64) -> (usize, usize) {
    let mut pairs = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, f) in found.iter().enumerate() {
            let d = (t.x - f.x).hypot(t.y - f.y);
            if d <= max_dist {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_t = vec![false; truth.len()];
    let mut used_f = vec![false; found.len()];
    let (mut pos, mut dir) = (0, 0);
    for (_, i, j) in pairs {
        if used_t[i] || used_f[j] {
            continue;
        }
        used_t[i] = true;
        used_f[j] = true;
        pos += 1;
        if angle_diff(truth[i].theta, found[j].theta) <= 30f64.to_radians() {
            dir += 1;
        }
    }
    (pos, dir)
}

#[test]
fn recall_on_synthetic_corpus() {
    let corpus = generate_corpus(&SynthConfig::new(10, 2, 2024)).unwrap();
    let params = EnhancementParams {
        binarize: true,
        ..EnhancementParams::default()
    };
    let (mut total, mut pos, mut dir, mut found_total) = (0, 0, 0, 0);
    for s in &corpus.samples {
        let found = detect_minutiae(&enhance(&s.image, &params).unwrap());
        let (p, d) = greedy_match(&s.minutiae, &found, 10.0);
        total += s.minutiae.len();
        found_total += found.len();
        pos += p;
        dir += d;
    }
    eprintln!("truth {total} found {found_total} positional {pos} directional {dir}");
    assert!(dir as f64 >= 0.6 * total as f64);
}
