//! Benchmark suite runner, published reference timings, speedup
//! aggregation and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qft::{Kernel, KernelPlan};
use crate::shor::{phase_fractions, run_shor, Phase, ShorConfig, StopCause};

/// The ten targets of the published suite with their prime factorizations,
/// in table order (semiprimes first, then three-factor composites).
pub const TABLE3_TARGETS: [(u64, &[u64]); 10] = [
    (77, &[7, 11]),
    (143, &[11, 13]),
    (323, &[17, 19]),
    (551, &[19, 29]),
    (589, &[19, 31]),
    (231, &[3, 7, 11]),
    (255, &[3, 5, 17]),
    (399, &[3, 7, 19]),
    (423, &[3, 3, 47]),
    (539, &[7, 7, 11]),
];

/// Published timings in seconds: `n` followed by one column per
/// implementation; empty cells mark runs that produced no result.
pub const TABLE3_TIMINGS_CSV: &str = include_str!("../data/table3.csv");

/// Columns that entered the published speedup row; the single-core
/// Hayward column (`H`) did not.
pub const TABLE3_COMPARED: [&str; 4] = ["FH", "Liquid", "G285", "G970m"];
pub const TABLE3_REFERENCE: &str = "G970m";

/// Tile count used when the tiled engine is requested without one.
pub const DEFAULT_TILED_TILES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub label: String,
    pub timings: BTreeMap<u64, f64>,
}

impl SpeedupRow {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            timings: BTreeMap::new(),
        }
    }

    pub fn available(&self) -> BTreeSet<u64> {
        self.timings.keys().copied().collect()
    }
}

/// Parses the wide `n,<label>,<label>,...` layout of [`TABLE3_TIMINGS_CSV`].
pub fn parse_speedup_csv(text: &str) -> Result<Vec<SpeedupRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("n") || headers.len() < 2 {
        return Err(Error::Parse("expected header `n,<label>,...`".into()));
    }
    let mut rows: Vec<SpeedupRow> = headers.iter().skip(1).map(SpeedupRow::new).collect();
    for record in reader.records() {
        let record = record?;
        let n: u64 = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad target `{}`", &record[0])))?;
        for (row, cell) in rows.iter_mut().zip(record.iter().skip(1)) {
            if cell.is_empty() {
                continue;
            }
            let t: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("bad timing `{cell}` for n = {n}")))?;
            row.timings.insert(n, t);
        }
    }
    Ok(rows)
}

pub fn table3_rows() -> Vec<SpeedupRow> {
    parse_speedup_csv(TABLE3_TIMINGS_CSV).expect("bundled timing table parses")
}

/// Ratio of summed run times over the targets available in every row,
/// relative to the `reference` row.
pub fn aggregate_speedup(rows: &[SpeedupRow], reference: &str) -> Result<BTreeMap<String, f64>> {
    let reference_row = rows
        .iter()
        .find(|r| r.label == reference)
        .ok_or_else(|| Error::MissingReference(reference.to_string()))?;
    let common = rows
        .iter()
        .map(SpeedupRow::available)
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    if common.is_empty() {
        return Err(Error::EmptyCommonSet);
    }
    let total = |row: &SpeedupRow| common.iter().map(|n| row.timings[n]).sum::<f64>();
    let denominator = total(reference_row);
    Ok(rows
        .iter()
        .map(|r| {
            let s = if r.label == reference {
                1.0
            } else {
                total(r) / denominator
            };
            (r.label.clone(), s)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Suite {
    Table3Small,
    Table3Full,
    Custom(Vec<u64>),
}

impl Suite {
    pub fn targets(&self) -> Vec<u64> {
        match self {
            Suite::Table3Small => vec![77, 143, 231, 255],
            Suite::Table3Full => TABLE3_TARGETS.iter().map(|(n, _)| *n).collect(),
            Suite::Custom(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause", content = "detail", rename_all = "snake_case")]
pub enum DnfCause {
    TimeBudget,
    MemoryGuard,
    AttemptsExhausted,
    InvalidTarget(String),
}

impl DnfCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            DnfCause::TimeBudget => "time_budget",
            DnfCause::MemoryGuard => "memory_guard",
            DnfCause::AttemptsExhausted => "attempts_exhausted",
            DnfCause::InvalidTarget(_) => "invalid_target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Finished,
    DidNotFinish { cause: DnfCause },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: u64,
    pub cofactors: Vec<u64>,
    pub engine: Kernel,
    pub plan: KernelPlan,
    pub seed: u64,
    pub wall_time_s: f64,
    pub phase_fractions: BTreeMap<Phase, f64>,
    pub qft_fraction: f64,
    pub attempts: usize,
    pub succeeded: bool,
    pub status: RunStatus,
}

fn plan_for(engine: Kernel, plan: &KernelPlan) -> KernelPlan {
    match engine {
        Kernel::Tiled if plan.tiles < 2 => KernelPlan {
            tiles: DEFAULT_TILED_TILES,
            ..*plan
        },
        Kernel::Tiled => *plan,
        _ => KernelPlan { tiles: 1, ..*plan },
    }
}

fn bench_one(n: u64, engine: Kernel, template: &ShorConfig) -> BenchRecord {
    let cfg = ShorConfig {
        n,
        kernel: engine,
        plan: plan_for(engine, &template.plan),
        ..template.clone()
    };
    let mut record = BenchRecord {
        n,
        cofactors: Vec::new(),
        engine,
        plan: cfg.plan,
        seed: cfg.seed,
        wall_time_s: 0.0,
        phase_fractions: BTreeMap::new(),
        qft_fraction: 0.0,
        attempts: 0,
        succeeded: false,
        status: RunStatus::Finished,
    };
    match run_shor(&cfg) {
        Ok(result) => {
            record.cofactors = result.factors.clone();
            record.wall_time_s = result.total_time;
            record.attempts = result.attempts.len();
            record.succeeded = result.succeeded;
            if let Ok(fractions) = phase_fractions(&result.attempts) {
                record.qft_fraction = fractions[&Phase::Qft];
                record.phase_fractions = fractions;
            }
            if !result.succeeded {
                let cause = match result.stop_cause {
                    Some(StopCause::TimeBudget) => DnfCause::TimeBudget,
                    _ => DnfCause::AttemptsExhausted,
                };
                record.status = RunStatus::DidNotFinish { cause };
            }
        }
        Err(Error::WidthExceeded { .. }) => {
            record.status = RunStatus::DidNotFinish {
                cause: DnfCause::MemoryGuard,
            };
        }
        Err(e) => {
            record.status = RunStatus::DidNotFinish {
                cause: DnfCause::InvalidTarget(e.to_string()),
            };
        }
    }
    record
}

/// Factors every target with every engine. Targets run one after another
/// unless `parallel_targets` is set; records come back in
/// (target, engine) order either way.
pub fn run_benchmark_suite(
    targets: &[u64],
    engines: &[Kernel],
    template: &ShorConfig,
    parallel_targets: bool,
) -> Vec<BenchRecord> {
    let jobs: Vec<(u64, Kernel)> = targets
        .iter()
        .flat_map(|&n| engines.iter().map(move |&e| (n, e)))
        .collect();
    if parallel_targets {
        jobs.par_iter()
            .map(|&(n, e)| bench_one(n, e, template))
            .collect()
    } else {
        jobs.iter()
            .map(|&(n, e)| bench_one(n, e, template))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Unknown {
                kind: "report format",
                value: s.to_string(),
            }),
        }
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "n",
    "cofactors",
    "engine",
    "block_size",
    "tiles",
    "workers",
    "seed",
    "wall_time_s",
    "qft_fraction",
    "succeeded",
];

pub fn format_cofactors(factors: &[u64]) -> String {
    factors
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

pub fn emit_report(records: &[BenchRecord], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => emit_csv(records),
        ReportFormat::Json => {
            serde_json::to_string_pretty(records).map_err(|e| Error::Parse(e.to_string()))
        }
        ReportFormat::Markdown => Ok(emit_markdown(records)),
    }
}

pub fn parse_json_report(text: &str) -> Result<Vec<BenchRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn emit_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            format_cofactors(&r.cofactors),
            r.engine.to_string(),
            r.plan.block_size.to_string(),
            r.plan.tiles.to_string(),
            r.plan.workers.to_string(),
            r.seed.to_string(),
            format!("{:.6}", r.wall_time_s),
            format!("{:.6}", r.qft_fraction),
            r.succeeded.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Speedup of each engine relative to `fft` (or the first engine when
/// `fft` was not run), over the targets every engine finished.
pub fn engine_speedups(records: &[BenchRecord]) -> Result<BTreeMap<String, f64>> {
    let engines = engines_in_order(records);
    let reference = if engines.contains(&Kernel::Fft) {
        Kernel::Fft
    } else {
        *engines.first().ok_or(Error::EmptyCommonSet)?
    };
    let rows: Vec<SpeedupRow> = engines
        .iter()
        .map(|&e| SpeedupRow {
            label: e.to_string(),
            timings: records
                .iter()
                .filter(|r| r.engine == e && r.succeeded)
                .map(|r| (r.n, r.wall_time_s))
                .collect(),
        })
        .collect();
    aggregate_speedup(&rows, reference.as_str())
}

fn engines_in_order(records: &[BenchRecord]) -> Vec<Kernel> {
    let mut engines = Vec::new();
    for r in records {
        if !engines.contains(&r.engine) {
            engines.push(r.engine);
        }
    }
    engines
}

fn emit_markdown(records: &[BenchRecord]) -> String {
    let engines = engines_in_order(records);
    let mut targets = Vec::new();
    for r in records {
        if !targets.contains(&r.n) {
            targets.push(r.n);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "| n | Cofactors |");
    for e in &engines {
        let _ = write!(out, " T_{e} [s] |");
    }
    out.push('\n');
    let _ = write!(out, "|---:|:---|");
    for _ in &engines {
        out.push_str("---:|");
    }
    out.push('\n');
    for &n in &targets {
        let row: Vec<&BenchRecord> = records.iter().filter(|r| r.n == n).collect();
        let cofactors = row
            .iter()
            .find(|r| r.succeeded)
            .map(|r| format_cofactors(&r.cofactors))
            .unwrap_or_else(|| "-".into());
        let _ = write!(out, "| {n} | {cofactors} |");
        for e in &engines {
            let cell = match row.iter().find(|r| r.engine == *e) {
                Some(r) if r.succeeded => format!("{:.3}", r.wall_time_s),
                Some(BenchRecord {
                    status: RunStatus::DidNotFinish { cause },
                    ..
                }) => format!("DNF ({})", cause.as_str()),
                Some(_) => "DNF".into(),
                None => String::new(),
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    if engines.len() >= 2 {
        let _ = write!(out, "| **Speed-up** | |");
        match engine_speedups(records) {
            Ok(s) => {
                for e in &engines {
                    let _ = write!(out, " **{:.1}** |", s[e.as_str()]);
                }
            }
            Err(_) => {
                for _ in &engines {
                    out.push_str(" n/a |");
                }
            }
        }
        out.push('\n');
    }
    out
}
