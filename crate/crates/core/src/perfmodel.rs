//! Cost model for the dense transform: host/device transfer volume for the
//! explicit-matrix variant, theoretical peak throughput, arithmetic
//! intensity and the resulting compute- vs memory-bound classification.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes per binary gigabyte; bandwidths are interpreted as GiB/s.
pub const GIB: f64 = (1u64 << 30) as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    pub cores: u32,
    /// 1 for CPUs.
    pub shaders_per_core: u32,
    pub clock_ghz: f64,
    pub fma_factor: f64,
    pub simd_lanes: f64,
    pub bandwidth_gib_s: f64,
    pub power_w: f64,
}

const BUNDLED_MACHINES: [(&str, &str); 3] = [
    (
        "i7-2760qm",
        include_str!("../data/machines/i7-2760qm.machine"),
    ),
    ("gtx285", include_str!("../data/machines/gtx285.machine")),
    ("gtx970m", include_str!("../data/machines/gtx970m.machine")),
];

impl MachineSpec {
    /// Parses flat `key = value` text. Blank lines and `#` comments are
    /// ignored; every field is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut nums: [Option<f64>; 7] = [None; 7];
        const KEYS: [&str; 7] = [
            "cores",
            "shaders_per_core",
            "clock_ghz",
            "fma_factor",
            "simd_lanes",
            "bandwidth_gib_s",
            "power_w",
        ];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "name" {
                name = Some(value.to_string());
                continue;
            }
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            let v: f64 = value.parse().map_err(|_| {
                Error::Parse(format!("line {}: `{value}` is not a number", lineno + 1))
            })?;
            nums[slot] = Some(v);
        }
        let get =
            |i: usize| nums[i].ok_or_else(|| Error::Parse(format!("missing key `{}`", KEYS[i])));
        let whole = |i: usize| -> Result<u32> {
            let v = get(i)?;
            if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                return Err(Error::Parse(format!(
                    "`{}` must be a whole number",
                    KEYS[i]
                )));
            }
            Ok(v as u32)
        };
        let spec = MachineSpec {
            name: name.ok_or_else(|| Error::Parse("missing key `name`".into()))?,
            cores: whole(0)?,
            shaders_per_core: whole(1)?,
            clock_ghz: get(2)?,
            fma_factor: get(3)?,
            simd_lanes: get(4)?,
            bandwidth_gib_s: get(5)?,
            power_w: get(6)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// One of the machines from the comparison table: `i7-2760qm`,
    /// `gtx285`, `gtx970m`.
    pub fn bundled(key: &str) -> Option<Self> {
        BUNDLED_MACHINES
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, text)| Self::parse(text).expect("bundled machine specs are valid"))
    }

    pub fn bundled_all() -> Vec<Self> {
        BUNDLED_MACHINES
            .iter()
            .map(|(_, text)| Self::parse(text).expect("bundled machine specs are valid"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.cores as f64,
            self.shaders_per_core as f64,
            self.clock_ghz,
            self.fma_factor,
            self.simd_lanes,
            self.bandwidth_gib_s,
            self.power_w,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "machine `{}` has a non-positive field",
                self.name
            )));
        }
        Ok(())
    }

    /// Arithmetic-intensity threshold (flops per byte) above which a kernel
    /// is compute bound on this machine.
    pub fn machine_balance(&self) -> f64 {
        theoretical_gflops(self) * 1e9 / (self.bandwidth_gib_s * GIB)
    }
}

/// Bytes moved when the full `2^(2h) x 2^(2h)` transform matrix is shipped
/// to the device along with state vectors, `h` being the half width of the
/// register: `(2 * 2^(2h) * 2^(2h) + 4 * 2^(2h)) * 4`.
pub fn transfer_bytes(h: u32) -> Result<u128> {
    if !(1..=31).contains(&h) {
        return Err(Error::InvalidInput(format!(
            "half width {h} outside 1..=31"
        )));
    }
    let dim: u128 = 1 << (2 * h);
    Ok((2 * dim * dim + 4 * dim) * 4)
}

pub fn transfer_time(bytes: u128, bandwidth_gib_s: f64) -> Result<f64> {
    if bandwidth_gib_s.is_nan() || bandwidth_gib_s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "bandwidth must be positive, got {bandwidth_gib_s}"
        )));
    }
    Ok(bytes as f64 / (bandwidth_gib_s * GIB))
}

/// Peak GFLOP/s as cores x shaders x clock x FMA factor x SIMD lanes.
pub fn theoretical_gflops(spec: &MachineSpec) -> f64 {
    spec.cores as f64
        * spec.shaders_per_core as f64
        * spec.clock_ghz
        * spec.fma_factor
        * spec.simd_lanes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReuseModel {
    /// Input read once and output written once.
    Perfect,
    /// Every term of every row re-reads a matrix entry from memory.
    None,
}

impl FromStr for ReuseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(ReuseModel::Perfect),
            "none" => Ok(ReuseModel::None),
            _ => Err(Error::Unknown {
                kind: "reuse model",
                value: s.to_string(),
            }),
        }
    }
}

/// Flops per byte of the dense transform on `q` amplitudes: `8 q^2` real
/// operations against 16-byte complex values.
pub fn arithmetic_intensity(q: u64, reuse: ReuseModel) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidInput(format!("q must be >= 2, got {q}")));
    }
    let q = q as f64;
    let flops = 8.0 * q * q;
    let bytes = match reuse {
        ReuseModel::Perfect => 16.0 * 2.0 * q,
        ReuseModel::None => 16.0 * (q * q + q),
    };
    Ok(flops / bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    ComputeBound,
    MemoryBound,
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundedness::ComputeBound => "compute_bound",
            Boundedness::MemoryBound => "memory_bound",
        })
    }
}

/// Ties with the machine balance count as compute bound.
pub fn classify_boundedness(intensity: f64, spec: &MachineSpec) -> Boundedness {
    if intensity >= spec.machine_balance() {
        Boundedness::ComputeBound
    } else {
        Boundedness::MemoryBound
    }
}
