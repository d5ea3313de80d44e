//! Command-line front end: `factor`, `bench` and `model` subcommands.
//!
//! Exit codes: 0 success, 1 factoring failed within its budget, 2 invalid
//! input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use shorsim_core::bench::{
    aggregate_speedup, emit_report, format_cofactors, parse_speedup_csv, run_benchmark_suite,
    ReportFormat, SpeedupRow, Suite, TABLE3_TIMINGS_CSV,
};
use shorsim_core::numtheory::{FactorOutcome, DEFAULT_MULTIPLIER_CAP};
use shorsim_core::perfmodel::{
    arithmetic_intensity, classify_boundedness, theoretical_gflops, transfer_bytes, transfer_time,
    MachineSpec, ReuseModel,
};
use shorsim_core::qft::{Kernel, KernelPlan, DEFAULT_BLOCK_SIZE};
use shorsim_core::shor::{
    profile_phases, run_shor_observed, Phase, ShorConfig, DEFAULT_MAX_ATTEMPTS,
};
use shorsim_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Default per-target wall-clock budget for `bench`, in seconds.
pub const DEFAULT_BENCH_BUDGET_S: f64 = 3600.0;

#[derive(Debug, Parser)]
#[command(
    name = "shorsim",
    version,
    about = "Simulate Shor's factoring algorithm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factor one integer.
    Factor(FactorArgs),
    /// Run a benchmark suite and write a report.
    Bench(BenchArgs),
    /// Evaluate the transfer, throughput and speedup models.
    Model(ModelArgs),
}

#[derive(Debug, Args)]
struct EngineArgs {
    /// Outputs per block of the dense/tiled kernel.
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block_size: usize,
    /// Input segments for the tiled kernel (defaults to 4 when tiled).
    #[arg(long)]
    tiles: Option<usize>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: u32,
    #[arg(long, default_value_t = DEFAULT_MULTIPLIER_CAP)]
    multiplier_cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FactorArgs {
    #[arg(long)]
    n: u64,
    /// Fixed base x instead of a random one.
    #[arg(long)]
    base: Option<u64>,
    #[arg(long, default_value = "fft")]
    kernel: String,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Write the post-transform state of each attempt to this file.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    /// Emit one JSON line per attempt on stderr.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// table3-small, table3-full or custom.
    #[arg(long, default_value = "table3-small")]
    suite: String,
    /// Comma-separated targets for the custom suite.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "fft")]
    engines: Vec<String>,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv, json or markdown.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Per-target wall-clock budget in seconds.
    #[arg(long, default_value_t = DEFAULT_BENCH_BUDGET_S)]
    time_budget: f64,
    /// Run independent targets concurrently.
    #[arg(long)]
    parallel_targets: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Half widths h for the explicit-matrix transfer model.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    transfer: Vec<u32>,
    /// Bundled machine name (i7-2760qm, gtx285, gtx970m) or spec file path.
    #[arg(long)]
    machine: Vec<String>,
    /// Register size q for the arithmetic-intensity estimate.
    #[arg(long)]
    intensity: Option<u64>,
    /// perfect or none.
    #[arg(long, default_value = "perfect")]
    reuse: String,
    /// Wide timing CSV (`n,<label>,...`), or `table3` for the bundled data.
    #[arg(long)]
    speedup: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    /// Restrict the speedup comparison to these labels.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Factor(a) => factor(a, out, err),
        Command::Bench(a) => bench(a, out),
        Command::Model(a) => model(a, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn parse_kernel(s: &str) -> Result<Kernel, CliError> {
    Ok(s.parse::<Kernel>()?)
}

fn build_plan(engine: &EngineArgs, kernel: Option<Kernel>) -> KernelPlan {
    let default = KernelPlan::default();
    let tiles = match (kernel, engine.tiles) {
        (_, Some(t)) => t,
        (Some(Kernel::Tiled), None) => shorsim_core::bench::DEFAULT_TILED_TILES,
        _ => 1,
    };
    KernelPlan {
        block_size: engine.block_size,
        tiles,
        workers: engine.workers.unwrap_or(default.workers),
    }
}

fn budget(seconds: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(seconds)
        .map_err(|_| CliError::Invalid(format!("bad time budget {seconds}")))
}

pub fn describe_outcome(outcome: &FactorOutcome) -> String {
    match outcome {
        FactorOutcome::Factors(a, b) => format!("factors({a},{b})"),
        FactorOutcome::Retry(reason) => format!(
            "retry({})",
            serde_json::to_value(reason).unwrap().as_str().unwrap()
        ),
        FactorOutcome::ClassicalShortcut(g) => format!("classical_shortcut({g})"),
    }
}

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn factor(a: FactorArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let kernel = parse_kernel(&a.kernel)?;
    let plan = build_plan(&a.engine, Some(kernel));
    if kernel != Kernel::Tiled && plan.tiles != 1 {
        return Err(CliError::Invalid(
            "--tiles only applies to the tiled kernel".into(),
        ));
    }
    let cfg = ShorConfig {
        base_override: a.base,
        seed: a.engine.seed,
        kernel,
        plan,
        max_attempts: a.engine.max_attempts,
        time_budget: a.time_budget.map(budget).transpose()?,
        multiplier_cap: a.engine.multiplier_cap,
        dump_state: a.dump_state.clone(),
        ..ShorConfig::new(a.n)
    };
    let verbose = a.verbose;
    let result = run_shor_observed(&cfg, &mut |trace| {
        if verbose {
            if let Ok(line) = serde_json::to_string(trace) {
                let _ = writeln!(err, "{line}");
            }
        }
    })?;

    writeln!(out, "n = {}", result.n)?;
    writeln!(
        out,
        "kernel = {kernel} (block_size={}, tiles={}, workers={})",
        plan.block_size, plan.tiles, plan.workers
    )?;
    for (i, t) in result.attempts.iter().enumerate() {
        writeln!(
            out,
            "attempt {}: target={} x={} q={} k={} m={} outcome={}",
            i + 1,
            t.target,
            t.x,
            opt(t.q),
            opt(t.k),
            opt(t.m),
            describe_outcome(&t.outcome)
        )?;
    }
    writeln!(out, "factors = {}", format_cofactors(&result.factors))?;
    writeln!(out, "succeeded = {}", result.succeeded)?;
    if let Some(cause) = result.stop_cause {
        writeln!(
            out,
            "stop_cause = {}",
            serde_json::to_value(cause).unwrap().as_str().unwrap()
        )?;
    }
    writeln!(out, "total_time_s = {:.6}", result.total_time)?;
    if let Ok(fractions) = profile_phases(&result) {
        let parts: Vec<String> = Phase::ALL
            .iter()
            .map(|p| format!("{p}={:.4}", fractions[p]))
            .collect();
        writeln!(out, "phase_fractions = {}", parts.join(" "))?;
    }
    Ok(if result.succeeded {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CliResult {
    let suite = match a.suite.as_str() {
        "table3-small" => Suite::Table3Small,
        "table3-full" => Suite::Table3Full,
        "custom" if !a.targets.is_empty() => Suite::Custom(a.targets.clone()),
        "custom" => return Err(CliError::Invalid("custom suite needs --targets".into())),
        other => return Err(CliError::Invalid(format!("unknown suite `{other}`"))),
    };
    let engines = a
        .engines
        .iter()
        .map(|e| parse_kernel(e))
        .collect::<Result<Vec<_>, _>>()?;
    let format: ReportFormat = a.format.parse()?;
    let template = ShorConfig {
        seed: a.engine.seed,
        plan: build_plan(&a.engine, None),
        max_attempts: a.engine.max_attempts,
        multiplier_cap: a.engine.multiplier_cap,
        time_budget: Some(budget(a.time_budget)?),
        ..ShorConfig::new(3)
    };
    let records = run_benchmark_suite(&suite.targets(), &engines, &template, a.parallel_targets);
    let report = emit_report(&records, format)?;
    match &a.output {
        Some(path) => std::fs::write(path, &report)?,
        None => out.write_all(report.as_bytes())?,
    }
    Ok(if records.iter().all(|r| r.succeeded) {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn load_machine(key: &str) -> Result<MachineSpec, CliError> {
    match MachineSpec::bundled(key) {
        Some(spec) => Ok(spec),
        None => Ok(MachineSpec::load(std::path::Path::new(key))?),
    }
}

fn model(a: ModelArgs, out: &mut dyn Write) -> CliResult {
    let machines = if a.machine.is_empty() {
        MachineSpec::bundled_all()
    } else {
        a.machine
            .iter()
            .map(|m| load_machine(m))
            .collect::<Result<_, _>>()?
    };

    writeln!(out, "machine,gflops,balance_flops_per_byte,bandwidth_gib_s")?;
    for m in &machines {
        writeln!(
            out,
            "{},{:.2},{:.4},{}",
            m.name,
            theoretical_gflops(m),
            m.machine_balance(),
            m.bandwidth_gib_s
        )?;
    }

    if !a.transfer.is_empty() {
        write!(out, "\nh,bytes")?;
        for m in &machines {
            write!(out, ",T[{}] s", m.name)?;
        }
        writeln!(out)?;
        for &h in &a.transfer {
            let bytes = transfer_bytes(h)?;
            write!(out, "{h},{bytes}")?;
            for m in &machines {
                write!(out, ",{:.9}", transfer_time(bytes, m.bandwidth_gib_s)?)?;
            }
            writeln!(out)?;
        }
    }

    if let Some(q) = a.intensity {
        let reuse: ReuseModel = a.reuse.parse()?;
        let intensity = arithmetic_intensity(q, reuse)?;
        writeln!(out, "\nq = {q}, intensity = {intensity:.4} flops/byte")?;
        for m in &machines {
            writeln!(out, "{}: {}", m.name, classify_boundedness(intensity, m))?;
        }
    }

    if let Some(source) = &a.speedup {
        let text = if source == "table3" {
            TABLE3_TIMINGS_CSV.to_string()
        } else {
            std::fs::read_to_string(source)?
        };
        let mut rows: Vec<SpeedupRow> = parse_speedup_csv(&text)?;
        if !a.columns.is_empty() {
            rows.retain(|r| a.columns.contains(&r.label));
        }
        let reference = a
            .reference
            .clone()
            .ok_or_else(|| CliError::Invalid("--speedup needs --reference".into()))?;
        let speedups = aggregate_speedup(&rows, &reference)?;
        writeln!(out, "\nlabel,speedup_vs_{reference}")?;
        for r in &rows {
            writeln!(out, "{},{:.4}", r.label, speedups[&r.label])?;
        }
    }
    Ok(EXIT_OK)
}
