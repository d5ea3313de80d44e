use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use super::check_power_of_two;
use crate::error::{Error, Result};

pub fn apply_hadamard(state: &mut [Complex64], qubit: u32) -> Result<()> {
    let width = check_power_of_two(state)?;
    if qubit >= width {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            width,
        });
    }
    let bit = 1usize << qubit;
    for chunk in state.chunks_exact_mut(bit << 1) {
        let (lo, hi) = chunk.split_at_mut(bit);
        for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
            let (a, b) = (*u, *v);
            *u = (a + b) * FRAC_1_SQRT_2;
            *v = (a - b) * FRAC_1_SQRT_2;
        }
    }
    Ok(())
}

/// Multiplies amplitudes whose index has both `control` and `target` set by
/// `exp(i * angle)`. The gate is diagonal, so the two roles are symmetric.
pub fn apply_controlled_phase(
    state: &mut [Complex64],
    control: u32,
    target: u32,
    angle: f64,
) -> Result<()> {
    let width = check_power_of_two(state)?;
    if control == target {
        return Err(Error::SameQubit(control));
    }
    for index in [control, target] {
        if index >= width {
            return Err(Error::QubitOutOfRange { index, width });
        }
    }
    let mask = (1usize << control) | (1usize << target);
    let phase = Complex64::from_polar(1.0, angle);
    state
        .iter_mut()
        .enumerate()
        .filter(|(i, _)| i & mask == mask)
        .for_each(|(_, a)| *a *= phase);
    Ok(())
}

pub(crate) fn bit_reverse_in_place(state: &mut [Complex64]) {
    let q = state.len();
    if q <= 2 {
        return;
    }
    let shift = usize::BITS - q.trailing_zeros();
    for i in 0..q {
        let j = i.reverse_bits() >> shift;
        if i < j {
            state.swap(i, j);
        }
    }
}

/// `out[rev(a)] = in[a]` where `rev` reverses the low `log2 q` bits.
pub fn bit_reverse_permute(state: &[Complex64]) -> Result<Vec<Complex64>> {
    check_power_of_two(state)?;
    let mut out = state.to_vec();
    bit_reverse_in_place(&mut out);
    Ok(out)
}

/// Gate-level transform: for each qubit from most to least significant, a
/// Hadamard followed by controlled phases `2 pi / 2^k` from every lower
/// qubit, then a bit-reversal permutation.
pub fn circuit_qft(state: &[Complex64], max_width: u32) -> Result<Vec<Complex64>> {
    let width = check_power_of_two(state)?;
    if width > max_width {
        return Err(Error::WidthExceeded {
            required: width,
            max: max_width,
        });
    }
    let mut out = state.to_vec();
    for target in (0..width).rev() {
        apply_hadamard(&mut out, target)?;
        for control in (0..target).rev() {
            let k = target - control + 1;
            apply_controlled_phase(&mut out, control, target, TAU / (1u64 << k) as f64)?;
        }
    }
    bit_reverse_in_place(&mut out);
    Ok(out)
}
