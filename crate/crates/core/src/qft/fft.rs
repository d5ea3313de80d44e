use num_complex::Complex64;

use super::circuit::bit_reverse_in_place;
use super::{check_length, check_power_of_two, TwiddleTable};
use crate::error::Result;

/// Radix-2 decimation-in-time transform with the same `+i` sign and
/// `1/sqrt(q)` scaling as the dense kernel.
pub fn fft_dft(state: &[Complex64]) -> Result<Vec<Complex64>> {
    check_power_of_two(state)?;
    let tw = TwiddleTable::new(state.len())?;
    fft_dft_with(state, &tw)
}

pub fn fft_dft_with(state: &[Complex64], tw: &TwiddleTable) -> Result<Vec<Complex64>> {
    let q = tw.q();
    check_length(state, q)?;
    let roots = tw.roots();
    let mut data = state.to_vec();
    bit_reverse_in_place(&mut data);

    let mut len = 2;
    while len <= q {
        let half = len / 2;
        let stride = q / len;
        for chunk in data.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let t = *b * roots[j * stride];
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }

    let scale = 1.0 / (q as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}
