#![allow(dead_code)]

use hcp_core::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Gaussian design with a dense coefficient vector of the given scale.
/// Returns the training data plus one extra test point and its label.
pub fn linear(seed: u64, n: usize, p: usize, coef_scale: f64, noise: f64) -> (Dataset, Vec<f64>, f64) {
    let mut r = rng(seed);
    let beta: Vec<f64> = (0..p).map(|_| coef_scale * normal(&mut r)).collect();
    let mut rows = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let row: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
        let mean: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        y.push(mean + noise * normal(&mut r));
        rows.push(row);
    }
    let x_new = rows.pop().unwrap();
    let y_new = y.pop().unwrap();
    (Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap(), x_new, y_new)
}
