//! Quantum Fourier transform engines over the part-1 amplitude vector.
//!
//! All engines compute the same unitary map
//!
//! ```text
//! out[k] = 1/sqrt(q) * sum_j exp(+2 pi i j k / q) * in[j]
//! ```
//!
//! with the `+i` sign convention and `1/sqrt(q)` normalization.
//!
//! * [`dense_dft`]: one output row per task, `q` complex multiply-adds each,
//!   rows grouped into blocks that are spread over a worker pool.
//! * [`tiled_dft`]: the input range is additionally split into tiles; each
//!   (block, tile) pair writes semi-results that a final pass reduces.
//! * [`fft_dft`]: iterative radix-2 decimation in time.
//! * [`circuit_qft`]: Hadamard and controlled-phase gates followed by a
//!   bit-reversal permutation.

mod circuit;
mod dense;
mod fft;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuit::{apply_controlled_phase, apply_hadamard, bit_reverse_permute, circuit_qft};
pub use dense::{dense_dft, tiled_dft};
pub use fft::{fft_dft, fft_dft_with};

/// Widest register the gate-level engine accepts unless told otherwise.
pub const DEFAULT_CIRCUIT_MAX_WIDTH: u32 = 12;

pub const DEFAULT_BLOCK_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Dense,
    Tiled,
    Fft,
    Circuit,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::Dense, Kernel::Tiled, Kernel::Fft, Kernel::Circuit];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kernel::Dense => "dense",
            Kernel::Tiled => "tiled",
            Kernel::Fft => "fft",
            Kernel::Circuit => "circuit",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "kernel",
                value: s.to_string(),
            })
    }
}

/// Work decomposition for the dense and tiled kernels.
///
/// Outputs are grouped into `q / block_size` blocks. A block smaller than
/// `block_size` is used when `q` itself is smaller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelPlan {
    pub block_size: usize,
    pub tiles: usize,
    pub workers: usize,
}

impl Default for KernelPlan {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            tiles: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl KernelPlan {
    pub fn new(block_size: usize, tiles: usize, workers: usize) -> Self {
        Self {
            block_size,
            tiles,
            workers,
        }
    }

    pub fn effective_block_size(&self, q: usize) -> usize {
        self.block_size.min(q)
    }

    pub fn num_blocks(&self, q: usize) -> usize {
        q / self.effective_block_size(q)
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidPlan("workers must be >= 1".into()));
        }
        if self.block_size == 0 || !q.is_multiple_of(self.effective_block_size(q)) {
            return Err(Error::InvalidPlan(format!(
                "block size {} does not divide q = {q}",
                self.block_size
            )));
        }
        if self.tiles == 0 || !q.is_multiple_of(self.tiles) {
            return Err(Error::InvalidPlan(format!(
                "tile count {} does not divide q = {q}",
                self.tiles
            )));
        }
        Ok(())
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidPlan(e.to_string()))
    }
}

/// `roots[j] = exp(+2 pi i j / q)`.
///
/// Only the first quadrant is evaluated with `sin`/`cos`; the rest follows
/// by quarter-turn rotation, so `roots[q/4] = i`, `roots[q/2] = -1` and
/// `roots[3q/4] = -i` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TwiddleTable {
    roots: Vec<Complex64>,
}

impl TwiddleTable {
    pub fn new(q: usize) -> Result<Self> {
        Self::with_max_width(q, usize::BITS - 1)
    }

    pub fn with_max_width(q: usize, max_width: u32) -> Result<Self> {
        if q < 2 || !q.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(q));
        }
        let width = q.trailing_zeros();
        if width > max_width {
            return Err(Error::WidthExceeded {
                required: width,
                max: max_width,
            });
        }
        if q == 2 {
            return Ok(Self {
                roots: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            });
        }
        let quarter = q / 4;
        let mut roots = vec![Complex64::new(0.0, 0.0); q];
        let step = std::f64::consts::TAU / q as f64;
        for j in 0..quarter {
            let (s, c) = (step * j as f64).sin_cos();
            let r = Complex64::new(c, s);
            roots[j] = r;
            roots[j + quarter] = Complex64::new(-r.im, r.re);
            roots[j + 2 * quarter] = Complex64::new(-r.re, -r.im);
            roots[j + 3 * quarter] = Complex64::new(r.im, -r.re);
        }
        roots[0] = Complex64::new(1.0, 0.0);
        Ok(Self { roots })
    }

    pub fn q(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    #[inline]
    pub fn get(&self, j: usize) -> Complex64 {
        self.roots[j & (self.roots.len() - 1)]
    }
}

fn check_length(state: &[Complex64], q: usize) -> Result<()> {
    if state.len() != q {
        return Err(Error::LengthMismatch {
            expected: q,
            actual: state.len(),
        });
    }
    Ok(())
}

fn check_power_of_two(state: &[Complex64]) -> Result<u32> {
    let q = state.len();
    if q < 2 || !q.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(q));
    }
    Ok(q.trailing_zeros())
}

/// Runs the selected engine. Twiddles are built on demand.
pub fn transform(
    kernel: Kernel,
    state: &[Complex64],
    plan: &KernelPlan,
    circuit_max_width: u32,
) -> Result<Vec<Complex64>> {
    match kernel {
        Kernel::Dense => {
            let tw = TwiddleTable::new(state.len())?;
            dense_dft(state, &tw, &KernelPlan { tiles: 1, ..*plan })
        }
        Kernel::Tiled => {
            let tw = TwiddleTable::new(state.len())?;
            tiled_dft(state, &tw, plan)
        }
        Kernel::Fft => fft_dft(state),
        Kernel::Circuit => circuit_qft(state, circuit_max_width),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twiddle_cases() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(
            TwiddleTable::new(4).unwrap().roots(),
            &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
        );
        assert_eq!(
            TwiddleTable::new(2).unwrap().roots(),
            &[c(1.0, 0.0), c(-1.0, 0.0)]
        );
        let r1 = TwiddleTable::new(8).unwrap().roots()[1];
        let h = std::f64::consts::SQRT_2 / 2.0;
        assert!((r1.re - h).abs() < 1e-15 && (r1.im - h).abs() < 1e-15);
        assert_eq!(TwiddleTable::new(6), Err(Error::NotPowerOfTwo(6)));
        assert_eq!(
            TwiddleTable::with_max_width(1 << 13, 12),
            Err(Error::WidthExceeded {
                required: 13,
                max: 12
            })
        );
    }

    #[test]
    fn twiddle_invariants() {
        for w in 1..=14 {
            let q = 1usize << w;
            let tw = TwiddleTable::new(q).unwrap();
            assert_eq!(tw.roots()[0], Complex64::new(1.0, 0.0));
            assert_eq!(tw.roots()[q / 2], Complex64::new(-1.0, 0.0));
            for j in 0..q {
                assert!((tw.roots()[j].norm() - 1.0).abs() < 1e-12);
                let direct =
                    Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / q as f64);
                assert!((tw.roots()[j] - direct).norm() < 1e-12);
                let prod = tw.roots()[j] * tw.roots()[(q - j) % q];
                assert!((prod - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plan_validation() {
        assert!(KernelPlan::new(256, 1, 1).validate(16).is_ok());
        assert!(KernelPlan::new(64, 4, 2).validate(1024).is_ok());
        assert!(KernelPlan::new(3, 1, 1).validate(16).is_err());
        assert!(KernelPlan::new(4, 3, 1).validate(16).is_err());
        assert!(KernelPlan::new(4, 1, 0).validate(16).is_err());
        assert_eq!(KernelPlan::new(256, 1, 1).num_blocks(8192), 32);
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in Kernel::ALL {
            assert_eq!(k.as_str().parse::<Kernel>().unwrap(), k);
        }
        assert!("gpu".parse::<Kernel>().is_err());
    }
}
