//! End-to-end factoring driver: base selection, the simulated quantum
//! period-finding pipeline, classical post-processing, retries, and
//! recursive splitting until every factor is prime.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{
    choose_register_width, derive_factors, extract_period, gcd, is_prime, pre_checks,
    FactorOutcome, PeriodCandidate, PeriodEstimate, RetryReason, DEFAULT_MAX_WIDTH,
    DEFAULT_MULTIPLIER_CAP,
};
use crate::qft::{self, Kernel, KernelPlan, DEFAULT_CIRCUIT_MAX_WIDTH};
use crate::qstate::{write_state_dump, CompositeRegister, Sampler, SeededSampler};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ShorConfig {
    pub n: u64,
    /// Fixed base for the top-level target; recursive splits always draw.
    pub base_override: Option<u64>,
    pub seed: u64,
    pub kernel: Kernel,
    pub plan: KernelPlan,
    /// Attempts allowed per split target.
    pub max_attempts: u32,
    pub time_budget: Option<Duration>,
    pub multiplier_cap: u64,
    pub max_width: u32,
    pub circuit_max_width: u32,
    /// Post-transform state of each attempt is written here (last one wins).
    pub dump_state: Option<PathBuf>,
}

impl ShorConfig {
    pub fn new(n: u64) -> Self {
        Self {
            n,
            base_override: None,
            seed: 0,
            kernel: Kernel::Fft,
            plan: KernelPlan::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            time_budget: None,
            multiplier_cap: DEFAULT_MULTIPLIER_CAP,
            max_width: DEFAULT_MAX_WIDTH,
            circuit_max_width: DEFAULT_CIRCUIT_MAX_WIDTH,
            dump_state: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidInput(format!(
                "n must be >= 3, got {}",
                self.n
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidInput("max_attempts must be >= 1".into()));
        }
        if let Some(x) = self.base_override {
            if x <= 1 || x >= self.n {
                return Err(Error::InvalidInput(format!(
                    "base {x} must satisfy 1 < x < {}",
                    self.n
                )));
            }
        }
        // Split targets get smaller registers, so the plan must fit every
        // power-of-two q rather than just the top-level one.
        if self.plan.workers == 0
            || !self.plan.block_size.is_power_of_two()
            || !self.plan.tiles.is_power_of_two()
        {
            return Err(Error::InvalidPlan(format!(
                "block size {} and tile count {} must be powers of two, workers >= 1",
                self.plan.block_size, self.plan.tiles
            )));
        }
        if self.kernel == Kernel::Tiled && self.plan.tiles < 2 {
            return Err(Error::InvalidPlan("tiled kernel needs tiles >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Setup,
    Entangle,
    Measure2,
    Qft,
    Sample,
    Postprocess,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Setup,
        Phase::Entangle,
        Phase::Measure2,
        Phase::Qft,
        Phase::Sample,
        Phase::Postprocess,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::Entangle => "entangle",
            Phase::Measure2 => "measure2",
            Phase::Qft => "qft",
            Phase::Sample => "sample",
            Phase::Postprocess => "postprocess",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Seconds spent in each pipeline phase of one attempt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub setup: f64,
    pub entangle: f64,
    pub measure2: f64,
    pub qft: f64,
    pub sample: f64,
    pub postprocess: f64,
}

impl PhaseTimes {
    pub fn get(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Setup => self.setup,
            Phase::Entangle => self.entangle,
            Phase::Measure2 => self.measure2,
            Phase::Qft => self.qft,
            Phase::Sample => self.sample,
            Phase::Postprocess => self.postprocess,
        }
    }

    fn slot(&mut self, phase: Phase) -> &mut f64 {
        match phase {
            Phase::Setup => &mut self.setup,
            Phase::Entangle => &mut self.entangle,
            Phase::Measure2 => &mut self.measure2,
            Phase::Qft => &mut self.qft,
            Phase::Sample => &mut self.sample,
            Phase::Postprocess => &mut self.postprocess,
        }
    }

    pub fn add(&mut self, phase: Phase, seconds: f64) {
        *self.slot(phase) += seconds;
    }

    pub fn total(&self) -> f64 {
        Phase::ALL.iter().map(|&p| self.get(p)).sum()
    }
}

/// Starts timing `phase`; the elapsed time is credited when the next phase
/// starts or the stopwatch finishes.
struct Stopwatch {
    times: PhaseTimes,
    current: Phase,
    since: Instant,
}

impl Stopwatch {
    fn start(phase: Phase) -> Self {
        Self {
            times: PhaseTimes::default(),
            current: phase,
            since: Instant::now(),
        }
    }

    fn switch(&mut self, phase: Phase) {
        let now = Instant::now();
        self.times
            .add(self.current, (now - self.since).as_secs_f64());
        self.current = phase;
        self.since = now;
    }

    fn finish(mut self) -> PhaseTimes {
        self.switch(self.current);
        self.times
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptTrace {
    /// The integer this attempt tried to split (differs from the top-level
    /// `n` during recursive splitting).
    pub target: u64,
    pub x: u64,
    pub q: Option<u64>,
    pub k: Option<u64>,
    pub m: Option<u64>,
    pub candidate: Option<PeriodCandidate>,
    pub outcome: FactorOutcome,
    pub phase_times: PhaseTimes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    TimeBudget,
    AttemptsExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShorResult {
    pub n: u64,
    /// Ascending. On failure, unsplit composites appear as-is.
    pub factors: Vec<u64>,
    pub attempts: Vec<AttemptTrace>,
    pub total_time: f64,
    pub succeeded: bool,
    pub stop_cause: Option<StopCause>,
}

/// One pass of the pipeline against `target`.
pub fn single_attempt(
    cfg: &ShorConfig,
    target: u64,
    sampler: &mut dyn Sampler,
) -> Result<AttemptTrace> {
    let mut watch = Stopwatch::start(Phase::Setup);
    let x = match cfg.base_override {
        Some(x) if target == cfg.n => x,
        _ => sampler.next_in_range(2, target - 2),
    };
    let mut trace = AttemptTrace {
        target,
        x,
        q: None,
        k: None,
        m: None,
        candidate: None,
        outcome: FactorOutcome::Retry(RetryReason::BadCandidate),
        phase_times: PhaseTimes::default(),
    };

    let g = gcd(x, target)?;
    if g > 1 {
        trace.outcome = FactorOutcome::ClassicalShortcut(g);
        trace.phase_times = watch.finish();
        return Ok(trace);
    }

    let width = choose_register_width(target, cfg.max_width)?;
    trace.q = Some(width.q);
    let mut reg = CompositeRegister::init_uniform(width.q as usize)?;

    watch.switch(Phase::Entangle);
    reg.entangle_modexp(x, target)?;

    watch.switch(Phase::Measure2);
    trace.k = Some(reg.measure_part2(sampler)?);

    watch.switch(Phase::Qft);
    let transformed = qft::transform(
        cfg.kernel,
        reg.amplitudes(),
        &cfg.plan,
        cfg.circuit_max_width,
    )?;
    reg.set_amplitudes(transformed)?;

    watch.switch(Phase::Sample);
    if let Some(path) = &cfg.dump_state {
        write_state_dump(path, reg.width(), reg.amplitudes())?;
    }
    let m = reg.sample_part1(sampler)?;
    trace.m = Some(m);
    drop(reg);

    watch.switch(Phase::Postprocess);
    trace.outcome = match extract_period(m, width.q, target, x, cfg.multiplier_cap)? {
        PeriodEstimate::Found(c) => {
            trace.candidate = Some(c);
            derive_factors(target, x, c.period)?
        }
        PeriodEstimate::Retry(reason) => FactorOutcome::Retry(reason),
    };
    trace.phase_times = watch.finish();
    Ok(trace)
}

fn derive_seed(seed: u64, child: u64, slot: u64) -> u64 {
    // splitmix64 finalizer over a mix of the inputs
    let mut z =
        seed ^ child.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ slot.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Runner<'a> {
    cfg: &'a ShorConfig,
    start: Instant,
    attempts: Vec<AttemptTrace>,
    stop_cause: Option<StopCause>,
    observer: &'a mut dyn FnMut(&AttemptTrace),
}

impl Runner<'_> {
    fn out_of_time(&self) -> bool {
        self.cfg
            .time_budget
            .is_some_and(|b| self.start.elapsed() >= b)
    }

    fn factor(&mut self, n: u64, seed: u64, out: &mut Vec<u64>) -> Result<()> {
        if n == 1 {
            return Ok(());
        }
        if is_prime(n) {
            out.push(n);
            return Ok(());
        }
        let split = match pre_checks(n)? {
            Some(FactorOutcome::ClassicalShortcut(g)) => Some((g, n / g)),
            _ => self.split(n, seed)?,
        };
        match split {
            Some((a, b)) => {
                self.factor(a, derive_seed(seed, a, 1), out)?;
                self.factor(b, derive_seed(seed, b, 2), out)
            }
            None => {
                out.push(n);
                Ok(())
            }
        }
    }

    fn split(&mut self, n: u64, seed: u64) -> Result<Option<(u64, u64)>> {
        if self.stop_cause.is_some() {
            return Ok(None);
        }
        let mut sampler = SeededSampler::new(seed);
        for _ in 0..self.cfg.max_attempts {
            if self.out_of_time() {
                self.stop_cause = Some(StopCause::TimeBudget);
                return Ok(None);
            }
            let trace = single_attempt(self.cfg, n, &mut sampler)?;
            (self.observer)(&trace);
            let outcome = trace.outcome;
            self.attempts.push(trace);
            match outcome {
                FactorOutcome::Factors(a, b) => return Ok(Some((a, b))),
                FactorOutcome::ClassicalShortcut(g) => return Ok(Some((g, n / g))),
                FactorOutcome::Retry(_) => {}
            }
        }
        self.stop_cause = Some(StopCause::AttemptsExhausted);
        Ok(None)
    }
}

pub fn run_shor(cfg: &ShorConfig) -> Result<ShorResult> {
    run_shor_observed(cfg, &mut |_| {})
}

/// Like [`run_shor`], calling `observer` after every attempt.
pub fn run_shor_observed(
    cfg: &ShorConfig,
    observer: &mut dyn FnMut(&AttemptTrace),
) -> Result<ShorResult> {
    cfg.validate()?;
    pre_checks(cfg.n)?;
    let mut runner = Runner {
        cfg,
        start: Instant::now(),
        attempts: Vec::new(),
        stop_cause: None,
        observer,
    };
    let mut factors = Vec::new();
    runner.factor(cfg.n, cfg.seed, &mut factors)?;
    factors.sort_unstable();
    let succeeded = runner.stop_cause.is_none() && factors.iter().all(|&f| is_prime(f));
    Ok(ShorResult {
        n: cfg.n,
        factors,
        total_time: runner.start.elapsed().as_secs_f64(),
        attempts: runner.attempts,
        succeeded,
        stop_cause: runner.stop_cause,
    })
}

/// Share of summed phase time spent in each phase across `attempts`.
pub fn phase_fractions(attempts: &[AttemptTrace]) -> Result<BTreeMap<Phase, f64>> {
    let mut sums = PhaseTimes::default();
    for a in attempts {
        for p in Phase::ALL {
            sums.add(p, a.phase_times.get(p));
        }
    }
    let total = sums.total();
    if attempts.is_empty() || total <= 0.0 {
        return Err(Error::EmptyTrace);
    }
    Ok(Phase::ALL
        .iter()
        .map(|&p| (p, sums.get(p) / total))
        .collect())
}

pub fn profile_phases(result: &ShorResult) -> Result<BTreeMap<Phase, f64>> {
    phase_fractions(&result.attempts)
}
