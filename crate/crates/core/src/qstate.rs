//! The two-part register `|r1, r2>` of the period-finding circuit.
//!
//! Part 1 is an amplitude vector of length `q`. Part 2 is never a quantum
//! register of its own: after the modular-exponentiation step it is a
//! deterministic function of the part-1 index, so it is stored as a parallel
//! array of residues `x^a mod n`. This keeps storage at `Θ(q)`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numtheory::gcd;

/// Tolerance on `sum |amp|^2 - 1` before a measurement is refused.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Source of uniform draws in `[0, 1)` used for simulated measurements.
pub trait Sampler {
    fn next_uniform(&mut self) -> f64;

    /// Uniform integer in `[lo, hi]`.
    fn next_in_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as f64;
        let offset = (self.next_uniform() * span) as u64;
        lo + offset.min(hi - lo)
    }
}

/// ChaCha8-backed sampler; equal seeds give identical streams on every
/// platform.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Sampler for SeededSampler {
    fn next_uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

/// Replays a fixed list of draws, then repeats the last one. Used to force
/// particular measurement outcomes.
#[derive(Debug, Clone)]
pub struct ScriptedSampler {
    draws: Vec<f64>,
    pos: usize,
}

impl ScriptedSampler {
    pub fn new(draws: impl Into<Vec<f64>>) -> Self {
        let draws = draws.into();
        assert!(
            !draws.is_empty(),
            "scripted sampler needs at least one draw"
        );
        Self { draws, pos: 0 }
    }
}

impl Sampler for ScriptedSampler {
    fn next_uniform(&mut self) -> f64 {
        let v = self.draws[self.pos.min(self.draws.len() - 1)];
        self.pos += 1;
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRegister {
    width: u32,
    amplitudes: Vec<Complex64>,
    residues: Vec<u64>,
    modulus: u64,
    base: u64,
    collapsed: Option<u64>,
}

fn check_power_of_two(q: usize) -> Result<u32> {
    if q < 2 || !q.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(q));
    }
    Ok(q.trailing_zeros())
}

/// Inverse-CDF draw over `weights`: the first index whose running sum
/// exceeds `u * total`. Zero-weight entries are never returned.
fn inverse_cdf<I>(weights: I, u: f64) -> Option<usize>
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = weights.into_iter();
    let total: f64 = iter.clone().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_nonzero = None;
    for (i, w) in iter.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_nonzero = Some(i);
        if acc > target {
            return Some(i);
        }
    }
    // Rounding can leave `acc` a hair below `target` for u close to 1.
    last_nonzero
}

impl CompositeRegister {
    /// Uniform superposition over all `q` part-1 indices with part 2 zeroed.
    pub fn init_uniform(q: usize) -> Result<Self> {
        let width = check_power_of_two(q)?;
        let amp = Complex64::new(1.0 / (q as f64).sqrt(), 0.0);
        Ok(Self {
            width,
            amplitudes: vec![amp; q],
            residues: vec![0; q],
            modulus: 0,
            base: 0,
            collapsed: None,
        })
    }

    /// Builds a register from explicit part-1 amplitudes; residues are zero.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let width = check_power_of_two(amplitudes.len())?;
        let q = amplitudes.len();
        Ok(Self {
            width,
            amplitudes,
            residues: vec![0; q],
            modulus: 0,
            base: 0,
            collapsed: None,
        })
    }

    pub fn q(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Replaces part 1, e.g. with the output of a transform engine.
    pub fn set_amplitudes(&mut self, amplitudes: Vec<Complex64>) -> Result<()> {
        if amplitudes.len() != self.q() {
            return Err(Error::LengthMismatch {
                expected: self.q(),
                actual: amplitudes.len(),
            });
        }
        self.amplitudes = amplitudes;
        Ok(())
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn collapsed_k(&self) -> Option<u64> {
        self.collapsed
    }

    /// Heap bytes held by the register.
    pub fn storage_bytes(&self) -> usize {
        self.amplitudes.capacity() * std::mem::size_of::<Complex64>()
            + self.residues.capacity() * std::mem::size_of::<u64>()
    }

    /// Writes `x^a mod n` into part 2 for every `a`, incrementally.
    pub fn entangle_modexp(&mut self, x: u64, n: u64) -> Result<()> {
        if n < 2 {
            return Err(Error::ModulusTooSmall(n));
        }
        if gcd(x, n)? != 1 {
            return Err(Error::NotCoprime { x, n });
        }
        if self.collapsed.is_some() {
            return Err(Error::AlreadyCollapsed);
        }
        let step = x % n;
        let mut value = 1 % n;
        if n <= u32::MAX as u64 {
            for r in self.residues.iter_mut() {
                *r = value;
                value = value * step % n;
            }
        } else {
            for r in self.residues.iter_mut() {
                *r = value;
                value = ((value as u128 * step as u128) % n as u128) as u64;
            }
        }
        self.modulus = n;
        self.base = x;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn ensure_normalized(&self) -> Result<()> {
        let s = self.norm_sqr();
        if (s - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized(s));
        }
        Ok(())
    }

    /// Probability of each distinct part-2 value, ascending by value.
    pub fn part2_distribution(&self) -> BTreeMap<u64, f64> {
        self.residue_classes()
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .collect()
    }

    /// `(residue, probability)` ascending by residue. A dense histogram is
    /// used when the modulus is small relative to `q`, which is always the
    /// case for registers sized by `choose_register_width`.
    fn residue_classes(&self) -> Vec<(u64, f64)> {
        let n = self.modulus;
        if n > 0 && n as usize <= self.q() {
            let mut hist = vec![0.0f64; n as usize];
            for (amp, &r) in self.amplitudes.iter().zip(&self.residues) {
                hist[r as usize] += amp.norm_sqr();
            }
            hist.into_iter()
                .enumerate()
                .filter(|&(_, p)| p > 0.0)
                .map(|(r, p)| (r as u64, p))
                .collect()
        } else {
            let mut probs = BTreeMap::new();
            for (amp, &r) in self.amplitudes.iter().zip(&self.residues) {
                *probs.entry(r).or_insert(0.0) += amp.norm_sqr();
            }
            probs.into_iter().collect()
        }
    }

    /// Measures part 2, collapsing part 1 onto the indices whose residue
    /// equals the observed value, then renormalizes.
    pub fn measure_part2(&mut self, sampler: &mut dyn Sampler) -> Result<u64> {
        if self.collapsed.is_some() {
            return Err(Error::AlreadyCollapsed);
        }
        self.ensure_normalized()?;
        let classes = self.residue_classes();
        let u = sampler.next_uniform();
        let idx =
            inverse_cdf(classes.iter().map(|&(_, p)| p), u).ok_or(Error::Unnormalized(0.0))?;
        let (k, p_k) = classes[idx];
        let scale = 1.0 / p_k.sqrt();
        for (amp, &r) in self.amplitudes.iter_mut().zip(&self.residues) {
            if r == k {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        self.collapsed = Some(k);
        Ok(k)
    }

    /// One-shot read of part 1 by inverse CDF over `|amp|^2`.
    pub fn sample_part1(&self, sampler: &mut dyn Sampler) -> Result<u64> {
        self.ensure_normalized()?;
        let u = sampler.next_uniform();
        inverse_cdf(self.amplitudes.iter().map(|a| a.norm_sqr()), u)
            .map(|m| m as u64)
            .ok_or(Error::Unnormalized(0.0))
    }
}

const DUMP_MAGIC: &[u8; 4] = b"QREG";
const DUMP_VERSION: u32 = 1;

/// Writes part-1 amplitudes as: `"QREG"`, version (u32 LE), width (u32 LE),
/// reserved (u32 zero), then `q` little-endian `(re, im)` f64 pairs.
pub fn write_state_dump(path: &Path, width: u32, amplitudes: &[Complex64]) -> Result<()> {
    if amplitudes.len() != 1usize << width {
        return Err(Error::LengthMismatch {
            expected: 1usize << width,
            actual: amplitudes.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&width.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for a in amplitudes {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_state_dump`]; returns `(width, amplitudes)`.
pub fn read_state_dump(path: &Path) -> Result<(u32, Vec<Complex64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Parse("bad state dump magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    if word(4) != DUMP_VERSION {
        return Err(Error::Parse(format!(
            "unsupported dump version {}",
            word(4)
        )));
    }
    let width = word(8);
    if width > 40 {
        return Err(Error::Parse(format!("implausible width {width}")));
    }
    let mut amps = Vec::with_capacity(1 << width);
    let mut buf = [0u8; 16];
    for _ in 0..(1u64 << width) {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        amps.push(Complex64::new(re, im));
    }
    Ok((width, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::{classical_period, modpow};

    #[test]
    fn uniform_amplitudes() {
        for (q, expect) in [
            (4, 0.5),
            (256, 0.0625),
            (2, std::f64::consts::FRAC_1_SQRT_2),
        ] {
            let reg = CompositeRegister::init_uniform(q).unwrap();
            assert!(reg
                .amplitudes()
                .iter()
                .all(|a| (a.re - expect).abs() < 1e-15 && a.im == 0.0));
            assert!(reg.residues().iter().all(|&r| r == 0));
            assert_eq!(reg.collapsed_k(), None);
        }
        assert_eq!(
            CompositeRegister::init_uniform(12),
            Err(Error::NotPowerOfTwo(12))
        );
        assert_eq!(
            CompositeRegister::init_uniform(1),
            Err(Error::NotPowerOfTwo(1))
        );
    }

    #[test]
    fn entangle_residues() {
        let mut reg = CompositeRegister::init_uniform(16).unwrap();
        reg.entangle_modexp(2, 15).unwrap();
        assert_eq!(
            reg.residues(),
            &[1, 2, 4, 8, 1, 2, 4, 8, 1, 2, 4, 8, 1, 2, 4, 8]
        );

        let mut reg = CompositeRegister::init_uniform(8).unwrap();
        reg.entangle_modexp(1, 15).unwrap();
        assert!(reg.residues().iter().all(|&r| r == 1));

        let mut reg = CompositeRegister::init_uniform(8).unwrap();
        reg.entangle_modexp(7, 15).unwrap();
        assert_eq!(reg.residues(), &[1, 7, 4, 13, 1, 7, 4, 13]);

        let mut reg = CompositeRegister::init_uniform(8).unwrap();
        assert_eq!(
            reg.entangle_modexp(6, 15),
            Err(Error::NotCoprime { x: 6, n: 15 })
        );
    }

    #[test]
    fn collapse_onto_residue_class() {
        // Outcomes are ordered by residue value: 1, 2, 4, 8 with 1/4 each.
        for (u, k, offset) in [(0.1, 1, 0usize), (0.3, 2, 1)] {
            let mut reg = CompositeRegister::init_uniform(256).unwrap();
            reg.entangle_modexp(2, 15).unwrap();
            let got = reg.measure_part2(&mut ScriptedSampler::new([u])).unwrap();
            assert_eq!(got, k);
            let support: Vec<usize> = (0..256)
                .filter(|&a| reg.amplitudes()[a].norm() > 0.0)
                .collect();
            assert_eq!(support.len(), 64);
            assert!(support
                .iter()
                .enumerate()
                .all(|(i, &a)| a == offset + 4 * i));
            assert!(support
                .iter()
                .all(|&a| reg.amplitudes()[a] == Complex64::new(0.125, 0.0)));
            assert!((reg.l2_norm() - 1.0).abs() < 1e-12);
            assert_eq!(reg.collapsed_k(), Some(k));
        }
    }

    #[test]
    fn constant_residue_collapse_is_certain() {
        let mut reg = CompositeRegister::init_uniform(16).unwrap();
        reg.entangle_modexp(1, 15).unwrap();
        let before = reg.amplitudes().to_vec();
        let k = reg.measure_part2(&mut SeededSampler::new(3)).unwrap();
        assert_eq!(k, 1);
        for (a, b) in before.iter().zip(reg.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(
            reg.measure_part2(&mut SeededSampler::new(3)),
            Err(Error::AlreadyCollapsed)
        );
    }

    #[test]
    fn unnormalized_register_is_refused() {
        let mut reg =
            CompositeRegister::from_amplitudes(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            reg.sample_part1(&mut SeededSampler::new(0)),
            Err(Error::Unnormalized(_))
        ));
        assert!(matches!(
            reg.measure_part2(&mut SeededSampler::new(0)),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn part1_sampling() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[3] = Complex64::new(0.0, 1.0);
        let reg = CompositeRegister::from_amplitudes(amps).unwrap();
        for seed in 0..20 {
            assert_eq!(reg.sample_part1(&mut SeededSampler::new(seed)).unwrap(), 3);
        }
        let uniform = CompositeRegister::init_uniform(4).unwrap();
        assert_eq!(
            uniform
                .sample_part1(&mut ScriptedSampler::new([0.99]))
                .unwrap(),
            3
        );
        assert_eq!(
            uniform
                .sample_part1(&mut ScriptedSampler::new([0.0]))
                .unwrap(),
            0
        );
        assert_eq!(
            uniform
                .sample_part1(&mut ScriptedSampler::new([0.26]))
                .unwrap(),
            1
        );
    }

    #[test]
    fn norms() {
        assert_eq!(CompositeRegister::init_uniform(256).unwrap().l2_norm(), 1.0);
        let zero = CompositeRegister::from_amplitudes(vec![Complex64::new(0.0, 0.0); 8]).unwrap();
        assert_eq!(zero.l2_norm(), 0.0);
    }

    #[test]
    fn part2_probabilities_sum_to_one() {
        for n in [15u64, 21, 33, 35, 77, 91] {
            let q = choose_q(n);
            for x in 2..n {
                if gcd(x, n).unwrap() != 1 {
                    continue;
                }
                let mut reg = CompositeRegister::init_uniform(q).unwrap();
                reg.entangle_modexp(x, n).unwrap();
                let total: f64 = reg.part2_distribution().values().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    fn choose_q(n: u64) -> usize {
        crate::numtheory::choose_register_width(n, 30).unwrap().q as usize
    }

    #[test]
    fn collapse_support_is_a_comb_of_the_period() {
        for n in 3..=50u64 {
            let q = choose_q(n);
            for x in 2..n {
                if gcd(x, n).unwrap() != 1 {
                    continue;
                }
                let p = classical_period(x, n).unwrap() as usize;
                let mut reg = CompositeRegister::init_uniform(q).unwrap();
                reg.entangle_modexp(x, n).unwrap();
                let k = reg
                    .measure_part2(&mut SeededSampler::new(n * 1000 + x))
                    .unwrap();
                let support: Vec<usize> = (0..q)
                    .filter(|&a| reg.amplitudes()[a].norm_sqr() > 0.0)
                    .collect();
                let c = support[0];
                assert!(c < p);
                assert!(support
                    .iter()
                    .all(|&a| modpow(x, a as u64, n).unwrap() == k));
                assert!(support.windows(2).all(|w| w[1] - w[0] == p));
                assert_eq!(support.len(), (q - c).div_ceil(p));
                assert!((reg.l2_norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_seeds_give_equal_streams() {
        let mut a = SeededSampler::new(99);
        let mut b = SeededSampler::new(99);
        for _ in 0..100 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
        let mut s = SeededSampler::new(1);
        for _ in 0..1000 {
            let v = s.next_in_range(2, 13);
            assert!((2..=13).contains(&v));
        }
    }

    #[test]
    fn state_dump_layout() {
        let dir = std::env::temp_dir().join(format!("shorsim-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.qreg");
        let amps: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 2.0))
            .collect();
        write_state_dump(&path, 3, &amps).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 16 + 8 * 16);
        assert_eq!(&bytes[0..4], b"QREG");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[16 + 16..16 + 24], &1.0f64.to_le_bytes());
        assert_eq!(read_state_dump(&path).unwrap(), (3, amps));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
