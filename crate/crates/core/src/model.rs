//! Jobs, schedules and the planning horizon.
//!
//! A [`JobPool`] is the set of costed jobs handed to a scheduler. A
//! [`TimeHorizon`] is cut into `l` equal-duration windows, and a
//! [`ScheduleSet`] is one partition of the pool over those windows.
//! Schedule indices are 1-based (`δ_1 .. δ_l`) everywhere they are shown
//! to a user; [`AllocationRun`] works with 0-based slots internally.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when recomputed floating totals are compared.
pub const REL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl Job {
    pub fn new(id: impl Into<String>, cost: f64) -> Self {
        Job {
            id: id.into(),
            cost,
            location: None,
        }
    }

    pub fn with_location(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }
}

/// Ordered collection of jobs with unique ids and nonnegative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct JobPool {
    jobs: Vec<Job>,
}

impl JobPool {
    pub fn new(jobs: Vec<Job>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(jobs.len());
        for job in &jobs {
            if !(job.cost.is_finite() && job.cost >= 0.0) {
                return Err(Error::Config(format!(
                    "job `{}` has invalid cost {}; costs must be finite and nonnegative",
                    job.id, job.cost
                )));
            }
            if !seen.insert(job.id.as_str()) {
                return Err(Error::Config(format!("duplicate job id `{}`", job.id)));
            }
        }
        Ok(JobPool { jobs })
    }

    /// Builds a pool with ids `γ_1 .. γ_n` from bare costs.
    pub fn from_costs<I: IntoIterator<Item = f64>>(costs: I) -> Result<Self> {
        let jobs = costs
            .into_iter()
            .enumerate()
            .map(|(i, c)| Job::new(format!("γ_{}", i + 1), c))
            .collect();
        JobPool::new(jobs)
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.cost).collect()
    }

    pub fn total_cost(&self) -> f64 {
        self.jobs.iter().map(|j| j.cost).sum()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// Sub-pool of the jobs tagged with `location`. The scheduler runs once
    /// per location.
    pub fn filter_location(&self, location: &str) -> JobPool {
        JobPool {
            jobs: self
                .jobs
                .iter()
                .filter(|j| j.location.as_deref() == Some(location))
                .cloned()
                .collect(),
        }
    }

    /// Distinct location tags in first-seen order.
    pub fn locations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for loc in self.jobs.iter().filter_map(|j| j.location.as_ref()) {
            if !out.contains(loc) {
                out.push(loc.clone());
            }
        }
        out
    }

    /// Reads the jobs CSV format: header `id,cost[,location]`.
    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let id_col = col("id").ok_or_else(|| Error::MissingColumn {
            source_name: source_name.to_string(),
            column: "id".into(),
        })?;
        let cost_col = col("cost").ok_or_else(|| Error::MissingColumn {
            source_name: source_name.to_string(),
            column: "cost".into(),
        })?;
        let loc_col = col("location");

        let mut jobs = Vec::new();
        let mut seen = HashSet::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let id = record
                .get(id_col)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::parse(source_name, line, "missing job id"))?;
            let raw_cost = record
                .get(cost_col)
                .ok_or_else(|| Error::parse(source_name, line, "missing cost"))?;
            let cost: f64 = raw_cost
                .parse()
                .map_err(|_| Error::parse(source_name, line, format!("cost `{raw_cost}` is not a number")))?;
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("cost {cost} must be nonnegative"),
                ));
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::parse(source_name, line, format!("duplicate job id `{id}`")));
            }
            let location = loc_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string);
            jobs.push(Job {
                id: id.to_string(),
                cost,
                location,
            });
        }
        JobPool::new(jobs)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        JobPool::read_csv(file, &path.display().to_string())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_location = self.jobs.iter().any(|j| j.location.is_some());
        let mut wtr = csv::Writer::from_writer(writer);
        if with_location {
            wtr.write_record(["id", "cost", "location"])?;
        } else {
            wtr.write_record(["id", "cost"])?;
        }
        for job in &self.jobs {
            let cost = format_cost(job.cost);
            if with_location {
                wtr.write_record([job.id.as_str(), &cost, job.location.as_deref().unwrap_or("")])?;
            } else {
                wtr.write_record([job.id.as_str(), &cost])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<jobs csv>", e))?;
        Ok(())
    }
}

fn format_cost(cost: f64) -> String {
    if cost.fract() == 0.0 && cost.abs() < 1e15 {
        format!("{}", cost as i64)
    } else {
        format!("{cost}")
    }
}

/// Planning window `[start, finish)` cut into equal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeHorizon {
    pub start: f64,
    pub finish: f64,
    pub unit: f64,
}

impl TimeHorizon {
    pub fn new(start: f64, finish: f64, unit: f64) -> Result<Self> {
        let horizon = TimeHorizon { start, finish, unit };
        horizon.schedule_count()?;
        Ok(horizon)
    }

    /// Horizon of `count` unit-length schedules starting at zero.
    pub fn with_schedule_count(count: usize) -> Result<Self> {
        TimeHorizon::new(0.0, count as f64, 1.0)
    }

    /// Number of schedules `(finish - start) / unit`; must be a positive integer.
    pub fn schedule_count(&self) -> Result<usize> {
        let err = |why: &str| {
            Error::Config(format!(
                "start={}, finish={}, unit={}: {why}",
                self.start, self.finish, self.unit
            ))
        };
        if !(self.start.is_finite() && self.finish.is_finite() && self.unit.is_finite()) {
            return Err(err("values must be finite"));
        }
        if self.unit <= 0.0 {
            return Err(err("unit must be positive"));
        }
        if self.finish <= self.start {
            return Err(err("finish must be after start"));
        }
        let ratio = (self.finish - self.start) / self.unit;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > REL_TOLERANCE * rounded.max(1.0) {
            return Err(err("span is not an integer multiple of unit"));
        }
        if rounded < 1.0 {
            return Err(err("span is shorter than one unit"));
        }
        Ok(rounded as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// 1-based position in the original partition (`δ_index`).
    pub index: usize,
    pub duration: f64,
    pub job_ids: Vec<String>,
    pub total_cost: f64,
}

impl Schedule {
    pub fn job_count(&self) -> usize {
        self.job_ids.len()
    }

    /// Mean member cost, `None` for an empty schedule.
    pub fn avg_cost(&self) -> Option<f64> {
        if self.job_ids.is_empty() {
            None
        } else {
            Some(self.total_cost / self.job_ids.len() as f64)
        }
    }
}

/// Sum of member costs, looked up in `pool`.
pub fn recompute_total_cost(schedule: &Schedule, pool: &JobPool) -> Result<f64> {
    schedule.job_ids.iter().try_fold(0.0, |acc, id| {
        pool.get(id)
            .map(|j| acc + j.cost)
            .ok_or_else(|| Error::Integrity(format!("schedule δ_{} references unknown job `{id}`", schedule.index)))
    })
}

/// Sample variance with the `L - 1` denominator. `None` for fewer than two values.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    // Sorted summation makes the result independent of schedule order, so
    // permuted rows compare exactly equal.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some(ss / (n - 1) as f64)
}

/// Variance as stored on a [`ScheduleSet`]: sample variance, or 0 for a
/// single schedule where the sample variance is undefined.
pub(crate) fn set_variance(totals: &[f64]) -> f64 {
    sample_variance(totals).unwrap_or(0.0)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub schedules: Vec<Schedule>,
    /// 0-based iteration that produced the set, when it came from repeated allocation.
    pub iteration: Option<usize>,
    pub variance: f64,
}

impl ScheduleSet {
    pub fn totals(&self) -> Vec<f64> {
        self.schedules.iter().map(|s| s.total_cost).collect()
    }

    pub fn job_counts(&self) -> Vec<usize> {
        self.schedules.iter().map(Schedule::job_count).collect()
    }

    /// Checks partition, cached totals, and stored variance against `pool`.
    pub fn validate(&self, pool: &JobPool) -> Result<()> {
        if let Some(first) = self.schedules.first() {
            if self.schedules.iter().any(|s| s.duration != first.duration) {
                return Err(Error::Integrity("schedules have unequal durations".into()));
            }
        }
        let mut seen = HashSet::with_capacity(pool.len());
        for s in &self.schedules {
            for id in &s.job_ids {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Integrity(format!(
                        "job `{id}` appears in more than one schedule"
                    )));
                }
            }
            let total = recompute_total_cost(s, pool)?;
            if !close(total, s.total_cost) {
                return Err(Error::Integrity(format!(
                    "schedule δ_{} caches total {} but members sum to {total}",
                    s.index, s.total_cost
                )));
            }
        }
        if seen.len() != pool.len() {
            let missing = pool.jobs().iter().find(|j| !seen.contains(j.id.as_str()));
            return Err(Error::Integrity(format!(
                "job `{}` is not assigned to any schedule",
                missing.map(|j| j.id.as_str()).unwrap_or("?")
            )));
        }
        let expected = set_variance(&self.totals());
        if !close(expected, self.variance) {
            return Err(Error::Integrity(format!(
                "stored variance {} differs from recomputed {expected}",
                self.variance
            )));
        }
        Ok(())
    }
}

/// One complete assignment of every pool job to a 0-based schedule slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationRun {
    pub schedule_count: usize,
    /// `slots[j]` is the slot of the `j`-th pool job.
    pub slots: Vec<usize>,
}

impl AllocationRun {
    pub fn totals(&self, pool: &JobPool) -> Vec<f64> {
        let mut totals = vec![0.0; self.schedule_count];
        for (job, &slot) in pool.jobs().iter().zip(&self.slots) {
            totals[slot] += job.cost;
        }
        totals
    }

    pub fn job_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schedule_count];
        for &slot in &self.slots {
            counts[slot] += 1;
        }
        counts
    }

    /// Materializes the run as schedules `δ_1 .. δ_l` in slot order.
    pub fn to_schedule_set(&self, pool: &JobPool, duration: f64, iteration: Option<usize>) -> ScheduleSet {
        let mut schedules: Vec<Schedule> = (0..self.schedule_count)
            .map(|i| Schedule {
                index: i + 1,
                duration,
                job_ids: Vec::new(),
                total_cost: 0.0,
            })
            .collect();
        for (job, &slot) in pool.jobs().iter().zip(&self.slots) {
            let s = &mut schedules[slot];
            s.job_ids.push(job.id.clone());
            s.total_cost += job.cost;
        }
        let totals: Vec<f64> = schedules.iter().map(|s| s.total_cost).collect();
        ScheduleSet {
            schedules,
            iteration,
            variance: set_variance(&totals),
        }
    }
}

/// `rows x cols` table of per-schedule totals, one row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "cost matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("cost matrix rows have unequal lengths".into()));
        }
        CostMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }
}
