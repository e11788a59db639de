//! Balanced scheduling by repeated random allocation.
//!
//! The pipeline has three stages:
//!
//! 1. [`rra`] assigns every job to a uniformly random schedule, `K` times,
//!    and records the per-schedule totals of each iteration in a
//!    [`CostMatrix`].
//! 2. [`mbdf`] picks the iteration whose totals have the smallest sample
//!    variance.
//! 3. [`lcsf`] orders the winning schedules by non-increasing total cost,
//!    so the heaviest schedule is handed out first.
//!
//! [`run_ppsjbp`] composes the three. Iterations draw from independent
//! seeded streams (see [`crate::rng`]), so a run is reproducible for a given
//! master seed no matter how many worker threads execute it.
//!
//! By default only the cost matrix is kept; the winning allocation is
//! rebuilt by replaying its iteration stream. Set
//! [`RraConfig::retain_all`] to keep every allocation instead.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_variance, AllocationRun, CostMatrix, JobPool, ScheduleSet, TimeHorizon};
use crate::rng::{self, sample_slot};

/// Default number of allocation rounds.
pub const DEFAULT_ITERATIONS: usize = 8000;

/// How [`mbdf`] resolves equal minimum variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    /// Keep the last minimal row (the comparison is `<=`).
    #[default]
    Paper,
    /// Keep the first minimal row.
    First,
}

impl std::str::FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(TieMode::Paper),
            "first" => Ok(TieMode::First),
            other => Err(Error::Config(format!(
                "unknown tie mode `{other}` (expected paper|first)"
            ))),
        }
    }
}

/// Order in which jobs are drawn within one allocation round.
///
/// Destinations are i.i.d. uniform, so both orders give the same
/// distribution over allocations. `Shuffled` draws a random remaining job at
/// every step and consumes the random stream differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobOrder {
    #[default]
    Pool,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RraConfig {
    pub iterations: usize,
    pub schedule_count: usize,
    pub master_seed: u64,
    pub job_order: JobOrder,
    /// Keep every allocation rather than replaying winners from their seeds.
    pub retain_all: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl RraConfig {
    pub fn new(iterations: usize, schedule_count: usize, master_seed: u64) -> Self {
        RraConfig {
            iterations,
            schedule_count,
            master_seed,
            job_order: JobOrder::Pool,
            retain_all: false,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.schedule_count == 0 {
            return Err(Error::Config("schedule count must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Allocations {
    Stored(Vec<AllocationRun>),
    Replay { master_seed: u64, job_order: JobOrder },
}

/// Result of [`rra`]: the cost matrix plus a way to recover each iteration's allocation.
#[derive(Debug, Clone)]
pub struct RraOutput {
    pub cost_matrix: CostMatrix,
    allocations: Allocations,
}

impl RraOutput {
    pub fn iterations(&self) -> usize {
        self.cost_matrix.rows()
    }

    pub fn schedule_count(&self) -> usize {
        self.cost_matrix.cols()
    }

    /// Seed of `iteration`'s random stream, or `None` for injected allocations.
    pub fn iteration_seed(&self, iteration: usize) -> Option<u64> {
        match &self.allocations {
            Allocations::Replay { master_seed, .. } => Some(rng::derive_seed(*master_seed, iteration as u64)),
            Allocations::Stored(_) => None,
        }
    }

    /// Allocation produced by `iteration` (0-based).
    pub fn allocation(&self, pool: &JobPool, iteration: usize) -> Result<AllocationRun> {
        if iteration >= self.iterations() {
            return Err(Error::Config(format!(
                "iteration {iteration} out of range (ran {})",
                self.iterations()
            )));
        }
        match &self.allocations {
            Allocations::Stored(runs) => Ok(runs[iteration].clone()),
            Allocations::Replay { master_seed, job_order } => Ok(allocate_once(
                pool,
                self.schedule_count(),
                rng::derive_seed(*master_seed, iteration as u64),
                *job_order,
            )
            .0),
        }
    }
}

/// One allocation round: the slot of every job plus the per-slot totals.
fn allocate_once(pool: &JobPool, schedule_count: usize, seed: u64, order: JobOrder) -> (AllocationRun, Vec<f64>) {
    let jobs = pool.jobs();
    let mut rng = rng::stream_from_seed(seed);
    let mut slots = vec![0usize; jobs.len()];
    let mut totals = vec![0.0; schedule_count];
    match order {
        JobOrder::Pool => {
            for (j, job) in jobs.iter().enumerate() {
                let r = sample_slot(&mut rng, schedule_count);
                slots[j] = r;
                totals[r] += job.cost;
            }
        }
        JobOrder::Shuffled => {
            let mut remaining: Vec<usize> = (0..jobs.len()).collect();
            while !remaining.is_empty() {
                let r = sample_slot(&mut rng, schedule_count);
                let pick = remaining.swap_remove(rng.gen_range(0..remaining.len()));
                slots[pick] = r;
                totals[r] += jobs[pick].cost;
            }
        }
    }
    (AllocationRun { schedule_count, slots }, totals)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Repeated random allocation.
///
/// Row `k` of the returned matrix holds the per-schedule totals of
/// iteration `k`; every row sums to the pool's total cost.
pub fn rra(pool: &JobPool, config: &RraConfig) -> Result<RraOutput> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("job pool is empty".into()));
    }
    let l = config.schedule_count;
    let rounds: Vec<(Option<AllocationRun>, Vec<f64>)> = with_threads(config.threads, || {
        (0..config.iterations)
            .into_par_iter()
            .map(|k| {
                let seed = rng::derive_seed(config.master_seed, k as u64);
                let (run, totals) = allocate_once(pool, l, seed, config.job_order);
                (config.retain_all.then_some(run), totals)
            })
            .collect()
    })?;

    let mut data = Vec::with_capacity(config.iterations * l);
    let mut stored = Vec::new();
    for (run, totals) in rounds {
        data.extend_from_slice(&totals);
        stored.extend(run);
    }
    let allocations = if config.retain_all {
        Allocations::Stored(stored)
    } else {
        Allocations::Replay {
            master_seed: config.master_seed,
            job_order: config.job_order,
        }
    };
    Ok(RraOutput {
        cost_matrix: CostMatrix::new(config.iterations, l, data)?,
        allocations,
    })
}

/// Builds an [`RraOutput`] from fixed allocations instead of sampling.
///
/// Not for production runs: this exists so worked examples with known
/// allocation tables can be pushed through the selection and ordering
/// stages unchanged.
pub fn rra_from_allocations(pool: &JobPool, schedule_count: usize, runs: Vec<AllocationRun>) -> Result<RraOutput> {
    if runs.is_empty() {
        return Err(Error::Config("at least one allocation is required".into()));
    }
    if schedule_count == 0 {
        return Err(Error::Config("schedule count must be at least 1".into()));
    }
    let mut data = Vec::with_capacity(runs.len() * schedule_count);
    for (k, run) in runs.iter().enumerate() {
        if run.schedule_count != schedule_count || run.slots.len() != pool.len() {
            return Err(Error::Config(format!(
                "allocation {k} covers {} jobs over {} schedules, expected {} jobs over {schedule_count}",
                run.slots.len(),
                run.schedule_count,
                pool.len()
            )));
        }
        if let Some(&bad) = run.slots.iter().find(|&&s| s >= schedule_count) {
            return Err(Error::Config(format!(
                "allocation {k} uses schedule slot {bad} >= {schedule_count}"
            )));
        }
        data.extend(run.totals(pool));
    }
    Ok(RraOutput {
        cost_matrix: CostMatrix::new(runs.len(), schedule_count, data)?,
        allocations: Allocations::Stored(runs),
    })
}

/// Sample variance of every row.
pub fn row_variances(matrix: &CostMatrix) -> Result<Vec<f64>> {
    if matrix.cols() < 2 {
        return Err(Error::DegenerateVariance(matrix.cols()));
    }
    Ok(matrix
        .iter_rows()
        .map(|row| sample_variance(row).expect("at least two columns"))
        .collect())
}

/// Index (0-based) and value of the minimum row variance.
pub fn mbdf(matrix: &CostMatrix, tie: TieMode) -> Result<(usize, f64)> {
    if matrix.rows() == 0 {
        return Err(Error::Config("cost matrix has no rows".into()));
    }
    let variances = row_variances(matrix)?;
    Ok(argmin(&variances, tie))
}

pub(crate) fn argmin(values: &[f64], tie: TieMode) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        let better = match tie {
            TieMode::Paper => v <= best.1,
            TieMode::First => v < best.1,
        };
        if better {
            best = (i, v);
        }
    }
    best
}

/// Reorders schedules by non-increasing total cost. Equal totals keep their
/// relative order.
pub fn lcsf(mut set: ScheduleSet) -> ScheduleSet {
    // slice::sort_by is a stable merge sort
    set.schedules.sort_by(|a, b| b.total_cost.total_cmp(&a.total_cost));
    set
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpsjbpConfig {
    pub iterations: usize,
    pub master_seed: u64,
    pub tie_mode: TieMode,
    pub job_order: JobOrder,
    pub retain_all: bool,
    pub threads: Option<usize>,
}

impl Default for PpsjbpConfig {
    fn default() -> Self {
        PpsjbpConfig {
            iterations: DEFAULT_ITERATIONS,
            master_seed: 0,
            tie_mode: TieMode::Paper,
            job_order: JobOrder::Pool,
            retain_all: false,
            threads: None,
        }
    }
}

impl PpsjbpConfig {
    pub fn new(iterations: usize, master_seed: u64) -> Self {
        PpsjbpConfig {
            iterations,
            master_seed,
            ..Default::default()
        }
    }

    pub fn rra_config(&self, schedule_count: usize) -> RraConfig {
        RraConfig {
            iterations: self.iterations,
            schedule_count,
            master_seed: self.master_seed,
            job_order: self.job_order,
            retain_all: self.retain_all,
            threads: self.threads,
        }
    }
}

/// Full pipeline output, for callers that need more than the final schedules.
#[derive(Debug, Clone)]
pub struct PpsjbpRun {
    /// Winning schedules in non-increasing cost order.
    pub schedules: ScheduleSet,
    pub selected_iteration: usize,
    /// `None` when there was nothing to sample (a single schedule).
    pub rra: Option<RraOutput>,
}

/// Runs allocation, minimum-variance selection and ordering.
pub fn run_ppsjbp(pool: &JobPool, horizon: &TimeHorizon, config: &PpsjbpConfig) -> Result<ScheduleSet> {
    run_ppsjbp_detailed(pool, horizon, config).map(|r| r.schedules)
}

pub fn run_ppsjbp_detailed(pool: &JobPool, horizon: &TimeHorizon, config: &PpsjbpConfig) -> Result<PpsjbpRun> {
    let l = horizon.schedule_count()?;
    if pool.is_empty() {
        return Err(Error::Config("job pool is empty".into()));
    }
    if config.iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if l == 1 {
        // Only one allocation exists; the variance is undefined and irrelevant.
        let run = AllocationRun {
            schedule_count: 1,
            slots: vec![0; pool.len()],
        };
        return Ok(PpsjbpRun {
            schedules: run.to_schedule_set(pool, horizon.unit, Some(0)),
            selected_iteration: 0,
            rra: None,
        });
    }
    let output = rra(pool, &config.rra_config(l))?;
    finish_ppsjbp(pool, horizon, output, config.tie_mode)
}

/// Selection and ordering stages on an existing [`RraOutput`].
pub fn finish_ppsjbp(pool: &JobPool, horizon: &TimeHorizon, output: RraOutput, tie: TieMode) -> Result<PpsjbpRun> {
    let l = horizon.schedule_count()?;
    if output.schedule_count() != l {
        return Err(Error::Config(format!(
            "allocations use {} schedules but the horizon has {l}",
            output.schedule_count()
        )));
    }
    let (index, _) = mbdf(&output.cost_matrix, tie)?;
    let run = output.allocation(pool, index)?;
    let set = lcsf(run.to_schedule_set(pool, horizon.unit, Some(index)));
    Ok(PpsjbpRun {
        schedules: set,
        selected_iteration: index,
        rra: Some(output),
    })
}
