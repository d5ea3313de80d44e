//! Classical integer arithmetic around the quantum period-finding step.
//!
//! Everything here is a pure function on `u64`. Products that could exceed
//! 64 bits are widened to `u128` before reduction, so any 64-bit modulus is
//! safe even though the simulator itself only ever works with moduli below
//! a few thousand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register width the simulator will allocate by default (2^21
/// amplitudes, so `j * k` index products stay below 2^42).
pub const DEFAULT_MAX_WIDTH: u32 = 21;

/// Default number of multiples `k * d` tried per convergent denominator.
pub const DEFAULT_MULTIPLIER_CAP: u64 = 8;

/// The power-of-two register size `q = 2^width` with `n^2 <= q < 2 n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterWidth {
    pub q: u64,
    pub width: u32,
}

/// A verified period together with the convergent it was derived from.
///
/// `period` divides `multiplier * convergent.1`; it is equal to that product
/// unless the order-reduction pass found a smaller exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodCandidate {
    pub period: u64,
    pub convergent: (u64, u64),
    pub multiplier: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetryReason {
    OddPeriod,
    TrivialRoot,
    ZeroMeasurement,
    BadCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOutcome {
    /// `f1 * f2 == n` with `1 < f1 <= f2 < n`.
    Factors(u64, u64),
    Retry(RetryReason),
    /// A factor found without the quantum step (even input, perfect power,
    /// or a base sharing a factor with `n`).
    ClassicalShortcut(u64),
}

impl FactorOutcome {
    pub fn is_retry(&self) -> bool {
        matches!(self, FactorOutcome::Retry(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodEstimate {
    Found(PeriodCandidate),
    Retry(RetryReason),
}

pub fn gcd(a: u64, b: u64) -> Result<u64> {
    if a == 0 && b == 0 {
        return Err(Error::GcdOfZeros);
    }
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    Ok(a)
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod modulus` by right-to-left square-and-multiply.
pub fn modpow(base: u64, exp: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::ModulusTooSmall(modulus));
    }
    Ok(modpow_unchecked(base, exp, modulus))
}

fn modpow_unchecked(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut result = 1 % modulus;
    let mut base = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exp >>= 1;
    }
    result
}

/// Deterministic Miller-Rabin; the witness set is exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = modpow_unchecked(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Floor of the `k`-th root of `n`.
fn integer_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    let pow_le = |b: u64| b.checked_pow(k).is_some_and(|v| v <= n);
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

/// Returns `(b, k)` with `b^k == n` and `k >= 2` maximal, if `n` is a
/// perfect power.
pub fn perfect_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    let max_k = 63 - n.leading_zeros();
    (2..=max_k).rev().find_map(|k| {
        let b = integer_root(n, k);
        (b >= 2 && b.checked_pow(k) == Some(n)).then_some((b, k))
    })
}

/// Guards that must hold before the quantum reduction applies.
///
/// `Ok(None)` means `n` is an odd composite that is not a perfect power.
pub fn pre_checks(n: u64) -> Result<Option<FactorOutcome>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("cannot factor {n}")));
    }
    if n == 2 || is_prime(n) {
        return Err(Error::NothingToFactor(n));
    }
    if n.is_multiple_of(2) {
        return Ok(Some(FactorOutcome::ClassicalShortcut(2)));
    }
    Ok(perfect_power(n).map(|(b, _)| FactorOutcome::ClassicalShortcut(b)))
}

pub fn choose_register_width(n: u64, max_width: u32) -> Result<RegisterWidth> {
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "register width needs n >= 3, got {n}"
        )));
    }
    let n_sq = n as u128 * n as u128;
    // Smallest power of two >= n^2; it is automatically < 2 n^2.
    let width = if n_sq.is_power_of_two() {
        n_sq.trailing_zeros()
    } else {
        128 - n_sq.leading_zeros()
    };
    if width > max_width {
        return Err(Error::WidthExceeded {
            required: width,
            max: max_width,
        });
    }
    Ok(RegisterWidth {
        q: 1u64 << width,
        width,
    })
}

/// Order of `x` modulo `n` by direct iteration.
pub fn classical_period(x: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::ModulusTooSmall(n));
    }
    if gcd(x, n)? != 1 {
        return Err(Error::NotCoprime { x, n });
    }
    let x = x % n;
    let mut value = x;
    let mut p = 1;
    while value != 1 % n {
        value = mul_mod(value, x, n);
        p += 1;
    }
    Ok(p)
}

/// Continued-fraction convergents of `m / q`, each in lowest terms.
///
/// The expansion of a proper fraction always starts with `0/1`. When
/// `m / q > 1/2` the second convergent is `1/1`, so the first two
/// denominators can tie; after that they strictly increase.
pub fn convergents(m: u64, q: u64) -> Result<Vec<(u64, u64)>> {
    if m >= q {
        return Err(Error::MeasurementOutOfRange { m, q });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let (mut num, mut den) = (m, q);
    // (h_{i-1}, h_{i-2}) and (k_{i-1}, k_{i-2})
    let (mut h1, mut h2) = (1u64, 0u64);
    let (mut k1, mut k2) = (0u64, 1u64);
    let mut out = Vec::new();
    while den != 0 {
        let a = num / den;
        let h = a * h1 + h2;
        let k = a * k1 + k2;
        out.push((h, k));
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        (num, den) = (den, num % den);
    }
    Ok(out)
}

/// Shrinks a verified exponent `p` (with `x^p = 1 mod n`) to the exact order
/// of `x` by stripping prime factors while the congruence still holds.
fn reduce_to_order(x: u64, mut p: u64, n: u64) -> u64 {
    let mut rest = p;
    let mut f = 2;
    while f * f <= rest {
        if rest.is_multiple_of(f) {
            while rest.is_multiple_of(f) {
                rest /= f;
            }
            while p.is_multiple_of(f) && modpow_unchecked(x, p / f, n) == 1 {
                p /= f;
            }
        }
        f += 1;
    }
    if rest > 1 {
        while p.is_multiple_of(rest) && modpow_unchecked(x, p / rest, n) == 1 {
            p /= rest;
        }
    }
    p
}

/// Estimates the period of `x^a mod n` from a part-1 measurement `m`.
///
/// Candidates are `k * d` for every convergent denominator `d <= n` and
/// `k = 1..=multiplier_cap`; the smallest one satisfying `x^p = 1 (mod n)`
/// wins (ties go to the smaller multiplier) and is then reduced to the
/// exact multiplicative order.
pub fn extract_period(
    m: u64,
    q: u64,
    n: u64,
    x: u64,
    multiplier_cap: u64,
) -> Result<PeriodEstimate> {
    if m >= q {
        return Err(Error::MeasurementOutOfRange { m, q });
    }
    if n < 2 {
        return Err(Error::ModulusTooSmall(n));
    }
    if m == 0 {
        return Ok(PeriodEstimate::Retry(RetryReason::ZeroMeasurement));
    }
    let mut best: Option<PeriodCandidate> = None;
    for conv in convergents(m, q)? {
        let d = conv.1;
        if d > n {
            break;
        }
        for k in 1..=multiplier_cap {
            let p = k * d;
            let better = best.is_none_or(|b| (p, k) < (b.period, b.multiplier));
            if better && modpow_unchecked(x, p, n) == 1 {
                best = Some(PeriodCandidate {
                    period: p,
                    convergent: conv,
                    multiplier: k,
                });
            }
        }
    }
    Ok(match best {
        Some(mut c) => {
            c.period = reduce_to_order(x, c.period, n);
            PeriodEstimate::Found(c)
        }
        None => PeriodEstimate::Retry(RetryReason::BadCandidate),
    })
}

/// Turns a verified period into a nontrivial split of `n`, or a retry signal.
pub fn derive_factors(n: u64, x: u64, p: u64) -> Result<FactorOutcome> {
    if p == 0 || modpow(x, p, n)? != 1 {
        return Err(Error::NotAPeriod { x, p, n });
    }
    if p % 2 == 1 {
        return Ok(FactorOutcome::Retry(RetryReason::OddPeriod));
    }
    let y = modpow_unchecked(x, p / 2, n);
    if y == n - 1 {
        return Ok(FactorOutcome::Retry(RetryReason::TrivialRoot));
    }
    // y == 1 gives gcd(0, n) = n, which is filtered as trivial below.
    let candidates = [gcd(y.wrapping_sub(1) % n, n)?, gcd((y + 1) % n, n)?];
    Ok(candidates
        .into_iter()
        .find(|&f| f > 1 && f < n)
        .map(|f| {
            let g = n / f;
            FactorOutcome::Factors(f.min(g), f.max(g))
        })
        .unwrap_or(FactorOutcome::Retry(RetryReason::BadCandidate)))
}
