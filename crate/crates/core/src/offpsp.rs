//! Threshold-greedy baseline.
//!
//! Jobs are taken in order of decreasing utility/cost ratio and appended to
//! the current schedule. Once an append pushes the schedule's total past
//! its threshold, the schedule is closed and filling moves to the next one.
//! Whatever remains after the last schedule is closed stays in the last
//! schedule, so every job is placed.
//!
//! Utility is uniform, so the ratio order is plain cost order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{set_variance, JobPool, Schedule, ScheduleSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffpspConfig {
    pub schedule_count: usize,
    /// Per-schedule cost budget.
    pub threshold: f64,
    pub uniform_utility: f64,
    /// Duration recorded on each produced schedule.
    pub duration: f64,
}

impl OffpspConfig {
    /// Threshold defaults to total pool cost divided by the schedule count.
    pub fn for_pool(pool: &JobPool, schedule_count: usize) -> Self {
        let threshold = if schedule_count == 0 {
            0.0
        } else {
            pool.total_cost() / schedule_count as f64
        };
        OffpspConfig {
            schedule_count,
            threshold,
            uniform_utility: 1.0,
            duration: 1.0,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.schedule_count == 0 {
            return Err(Error::Config("schedule count must be at least 1".into()));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::Config(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.uniform_utility.is_finite() && self.uniform_utility > 0.0) {
            return Err(Error::Config(format!(
                "utility must be positive, got {}",
                self.uniform_utility
            )));
        }
        Ok(())
    }
}

fn ratio(utility: f64, cost: f64) -> f64 {
    if cost == 0.0 {
        f64::INFINITY
    } else {
        utility / cost
    }
}

/// Allocation order: highest ratio first, then lower cost, then input order.
pub fn allocation_order(pool: &JobPool, utility: f64) -> Vec<usize> {
    let jobs = pool.jobs();
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    // stable: equal keys keep input order
    order.sort_by(|&a, &b| {
        let (ca, cb) = (jobs[a].cost, jobs[b].cost);
        ratio(utility, cb)
            .total_cmp(&ratio(utility, ca))
            .then(ca.total_cmp(&cb))
    });
    order
}

pub fn run_offpsp(pool: &JobPool, config: &OffpspConfig) -> Result<ScheduleSet> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("job pool is empty".into()));
    }
    let l = config.schedule_count;
    let mut schedules: Vec<Schedule> = (0..l)
        .map(|i| Schedule {
            index: i + 1,
            duration: config.duration,
            job_ids: Vec::new(),
            total_cost: 0.0,
        })
        .collect();

    let jobs = pool.jobs();
    let mut current = 0;
    for j in allocation_order(pool, config.uniform_utility) {
        let s = &mut schedules[current];
        s.job_ids.push(jobs[j].id.clone());
        s.total_cost += jobs[j].cost;
        if s.total_cost > config.threshold && current + 1 < l {
            current += 1;
        }
    }

    let totals: Vec<f64> = schedules.iter().map(|s| s.total_cost).collect();
    Ok(ScheduleSet {
        schedules,
        iteration: None,
        variance: set_variance(&totals),
    })
}

/// Number of zero-cost jobs; these have unbounded ratio and are placed first.
pub fn zero_cost_jobs(pool: &JobPool) -> usize {
    pool.jobs().iter().filter(|j| j.cost == 0.0).count()
}
