//! Concatenation and projection identities.

use approx::assert_relative_eq;
use fplfix_core::comparator::cosine;
use fplfix_core::embedding::{concat_branches, fit_projection, l2_normalize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..dim).map(|_| d.sample(rng)).collect()
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    l2_normalize(&gaussian(rng, dim)).unwrap()
}

#[test]
fn concat_cosine_is_mean_of_branch_cosines() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let (t1, t2, m1, m2) = (
            unit(&mut rng, 24),
            unit(&mut rng, 24),
            unit(&mut rng, 10),
            unit(&mut rng, 10),
        );
        let c = cosine(&concat_branches(&t1, &m1).unwrap(), &concat_branches(&t2, &m2).unwrap()).unwrap();
        let expected = cosine(&t1, &t2).unwrap() + cosine(&m1, &m2).unwrap();
        assert!((2.0 * c - expected).abs() <= 1e-9);
    }
}

#[test]
fn full_rank_projection_preserves_cosines_on_centered_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dim = 12;
    let mut data: Vec<Vec<f64>> = (0..60).map(|_| gaussian(&mut rng, dim)).collect();
    let mean: Vec<f64> = (0..dim)
        .map(|j| data.iter().map(|v| v[j]).sum::<f64>() / 60.0)
        .collect();
    for v in &mut data {
        for (x, m) in v.iter_mut().zip(&mean) {
            *x -= m;
        }
    }
    let model = fit_projection(&data, dim).unwrap();
    let projected: Vec<Vec<f64>> = data.iter().map(|v| model.project(v).unwrap()).collect();
    let normalized: Vec<Vec<f64>> = data.iter().map(|v| l2_normalize(v).unwrap()).collect();
    for i in 0..data.len() {
        for j in 0..data.len() {
            let a = cosine(&projected[i], &projected[j]).unwrap();
            let b = cosine(&normalized[i], &normalized[j]).unwrap();
            assert!((a - b).abs() <= 1e-6);
        }
    }
}

/// Leading eigenvalues by power iteration with deflation.
fn power_eigenvalues(cov: &[Vec<f64>], k: usize) -> Vec<f64> {
    let d = cov.len();
    let mut a: Vec<Vec<f64>> = cov.to_vec();
    let mut out = Vec::new();
    for _ in 0..k {
        let mut v = vec![1.0; d];
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[i][j] * v[j]).sum()).collect();
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / n).collect();
            lambda = n;
        }
        for i in 0..d {
            for j in 0..d {
                a[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push(lambda);
    }
    out
}

#[test]
fn explained_variance_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let scales = [
        5.0, 4.0, 3.0, 2.5, 2.0, 1.5, 1.2, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2,
    ];
    let data: Vec<Vec<f64>> = (0..100)
        .map(|_| gaussian(&mut rng, 16).iter().zip(&scales).map(|(x, s)| x * s).collect())
        .collect();
    let model = fit_projection(&data, 4).unwrap();
    let ev = model.explained_variance();
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));

    let n = data.len() as f64;
    let mean: Vec<f64> = (0..16).map(|j| data.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let cov: Vec<Vec<f64>> = (0..16)
        .map(|i| {
            (0..16)
                .map(|j| data.iter().map(|v| (v[i] - mean[i]) * (v[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect();
    let reference = power_eigenvalues(&cov, 4);
    for (a, b) in ev.iter().zip(&reference) {
        assert_relative_eq!(*a, *b, max_relative = 1e-6);
    }
}
