//! Independent reference helpers for unit tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook transform evaluating every phase from scratch.
pub fn naive_dft(state: &[Complex64]) -> Vec<Complex64> {
    let q = state.len();
    let norm = 1.0 / (q as f64).sqrt();
    (0..q)
        .map(|k| {
            state
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let angle = std::f64::consts::TAU * ((j * k) % q) as f64 / q as f64;
                    Complex64::from_polar(1.0, angle) * v
                })
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

pub fn random_unit_state(q: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..q)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
