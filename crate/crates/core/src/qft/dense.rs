use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_length, KernelPlan, TwiddleTable};
use crate::error::{Error, Result};

/// `sum_{j in start..start+input.len()} roots[(j * k) mod q] * input[j - start]`,
/// accumulated in ascending `j`.
#[inline]
fn row_sum(input: &[Complex64], start: usize, roots: &[Complex64], k: usize) -> Complex64 {
    let mask = roots.len() - 1;
    let mut idx = start.wrapping_mul(k) & mask;
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for v in input {
        let r = roots[idx];
        re += r.re * v.re - r.im * v.im;
        im += r.re * v.im + r.im * v.re;
        idx = (idx + k) & mask;
    }
    Complex64::new(re, im)
}

/// Direct `O(q^2)` transform, one output row per task.
///
/// Outputs are split into blocks of `plan.block_size` and the blocks are
/// distributed over `plan.workers` threads. Each row's inner sum runs in a
/// fixed order, so the result is bitwise independent of the worker count.
pub fn dense_dft(
    state: &[Complex64],
    tw: &TwiddleTable,
    plan: &KernelPlan,
) -> Result<Vec<Complex64>> {
    let q = tw.q();
    check_length(state, q)?;
    if plan.tiles != 1 {
        return Err(Error::InvalidPlan(format!(
            "dense kernel is untiled, got tiles = {}",
            plan.tiles
        )));
    }
    plan.validate(q)?;
    let block = plan.effective_block_size(q);
    let scale = 1.0 / (q as f64).sqrt();
    let roots = tw.roots();
    let mut out = vec![Complex64::new(0.0, 0.0); q];
    plan.pool()?.install(|| {
        out.par_chunks_mut(block).enumerate().for_each(|(b, rows)| {
            for (i, slot) in rows.iter_mut().enumerate() {
                let k = b * block + i;
                *slot = row_sum(state, 0, roots, k) * scale;
            }
        });
    });
    Ok(out)
}

/// Tiled variant: the input range is cut into `plan.tiles` contiguous
/// segments. Every (output block, segment) pair is an independent task
/// writing its semi-results into a `tiles x q` buffer; a single reduction
/// pass then adds each output's partials in ascending segment order.
pub fn tiled_dft(
    state: &[Complex64],
    tw: &TwiddleTable,
    plan: &KernelPlan,
) -> Result<Vec<Complex64>> {
    let q = tw.q();
    check_length(state, q)?;
    if plan.tiles < 2 {
        return Err(Error::InvalidPlan(format!(
            "tiled kernel needs at least 2 tiles, got {}; use the dense kernel",
            plan.tiles
        )));
    }
    plan.validate(q)?;
    let tiles = plan.tiles;
    let block = plan.effective_block_size(q);
    let num_blocks = q / block;
    let seg_len = q / tiles;
    let roots = tw.roots();

    // partials[s * q + k]: contribution of segment s to output k.
    let mut partials = vec![Complex64::new(0.0, 0.0); tiles * q];
    plan.pool()?.install(|| {
        partials
            .par_chunks_mut(block)
            .enumerate()
            .for_each(|(task, rows)| {
                let (seg, b) = (task / num_blocks, task % num_blocks);
                let start = seg * seg_len;
                let input = &state[start..start + seg_len];
                for (i, slot) in rows.iter_mut().enumerate() {
                    *slot = row_sum(input, start, roots, b * block + i);
                }
            });
    });

    let scale = 1.0 / (q as f64).sqrt();
    let out = (0..q)
        .map(|k| {
            let sum = (0..tiles).fold(Complex64::new(0.0, 0.0), |acc, s| acc + partials[s * q + k]);
            sum * scale
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{max_abs_diff, naive_dft, random_unit_state};

    fn basis(q: usize, i: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); q];
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    fn uniform(q: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0 / (q as f64).sqrt(), 0.0); q]
    }

    #[test]
    fn basis_zero_maps_to_uniform() {
        let tw = TwiddleTable::new(4).unwrap();
        let out = dense_dft(&basis(4, 0), &tw, &KernelPlan::new(256, 1, 1)).unwrap();
        assert!(out.iter().all(|a| *a == Complex64::new(0.5, 0.0)));
    }

    #[test]
    fn uniform_maps_to_delta() {
        let tw = TwiddleTable::new(256).unwrap();
        let out = dense_dft(&uniform(256), &tw, &KernelPlan::new(64, 1, 2)).unwrap();
        assert!((out[0] - 1.0).norm() < 1e-12);
        assert!(out[1..].iter().all(|a| a.norm() < 1e-12));

        let out = tiled_dft(&uniform(256), &tw, &KernelPlan::new(64, 4, 2)).unwrap();
        assert!((out[0] - 1.0).norm() < 1e-12);
        assert!(out[1..].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn collapsed_comb_has_four_peaks() {
        // k = 1 collapse for (n = 15, x = 2, q = 256): support a = 0 mod 4.
        let q = 256;
        let mut state = vec![Complex64::new(0.0, 0.0); q];
        for a in (0..q).step_by(4) {
            state[a] = Complex64::new(0.125, 0.0);
        }
        let tw = TwiddleTable::new(q).unwrap();
        let out = dense_dft(&state, &tw, &KernelPlan::default()).unwrap();
        for (k, amp) in out.iter().enumerate() {
            if k % 64 == 0 {
                assert!((amp.norm_sqr() - 0.25).abs() < 1e-12, "k = {k}");
            } else {
                assert!(amp.norm() < 1e-12, "k = {k}");
            }
        }
    }

    #[test]
    fn matches_naive_reference() {
        for q in [2usize, 8, 64, 512] {
            let state = random_unit_state(q, q as u64);
            let tw = TwiddleTable::new(q).unwrap();
            let reference = naive_dft(&state);
            let dense = dense_dft(&state, &tw, &KernelPlan::new(16, 1, 3)).unwrap();
            assert!(max_abs_diff(&dense, &reference) < 1e-12);
            if q >= 2 {
                let tiled = tiled_dft(&state, &tw, &KernelPlan::new(16, 2, 3)).unwrap();
                assert!(max_abs_diff(&tiled, &reference) < 1e-12);
            }
        }
    }

    #[test]
    fn tiled_matches_dense_on_random_state() {
        let q = 1024;
        let state = random_unit_state(q, 7);
        let tw = TwiddleTable::new(q).unwrap();
        let dense = dense_dft(&state, &tw, &KernelPlan::new(256, 1, 4)).unwrap();
        let tiled = tiled_dft(&state, &tw, &KernelPlan::new(256, 8, 4)).unwrap();
        assert!(max_abs_diff(&dense, &tiled) < 1e-9);
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let q = 2048;
        let state = random_unit_state(q, 11);
        let tw = TwiddleTable::new(q).unwrap();
        let base = dense_dft(&state, &tw, &KernelPlan::new(128, 1, 1)).unwrap();
        for workers in [2, 8] {
            let other = dense_dft(&state, &tw, &KernelPlan::new(128, 1, workers)).unwrap();
            assert!(
                base.iter()
                    .zip(&other)
                    .all(|(a, b)| a.re.to_bits() == b.re.to_bits()
                        && a.im.to_bits() == b.im.to_bits())
            );
        }
    }

    #[test]
    fn contract_errors() {
        let tw = TwiddleTable::new(16).unwrap();
        let state = uniform(16);
        assert!(matches!(
            tiled_dft(&state, &tw, &KernelPlan::new(4, 1, 1)),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            tiled_dft(&state, &tw, &KernelPlan::new(4, 3, 1)),
            Err(Error::InvalidPlan(_))
        ));
        assert!(matches!(
            dense_dft(&state, &tw, &KernelPlan::new(4, 2, 1)),
            Err(Error::InvalidPlan(_))
        ));
        assert_eq!(
            dense_dft(&uniform(8), &tw, &KernelPlan::default()),
            Err(Error::LengthMismatch {
                expected: 16,
                actual: 8
            })
        );
    }
}
