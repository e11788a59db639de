//! Machine-readable run reports.
//!
//! Reports serialize to canonical JSON: object keys sorted, floating values
//! printed with six significant digits, integers printed exactly. Two runs
//! with the same inputs therefore produce byte-identical output.

use std::fs;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{JobPool, ScheduleSet, TimeHorizon, REL_TOLERANCE};
use crate::offpsp::{run_offpsp, zero_cost_jobs, OffpspConfig};
use crate::ppsjbp::{run_ppsjbp_detailed, JobOrder, PpsjbpConfig, PpsjbpRun, TieMode};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetrics {
    /// Original schedule index `δ_index`.
    pub index: usize,
    pub total_cost: f64,
    pub job_count: usize,
    /// `None` for an empty schedule.
    pub avg_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub iteration: Option<usize>,
    pub per_schedule: Vec<ScheduleMetrics>,
    pub variance: f64,
}

fn metrics(set: &ScheduleSet) -> Vec<ScheduleMetrics> {
    set.schedules
        .iter()
        .map(|s| ScheduleMetrics {
            index: s.index,
            total_cost: s.total_cost,
            job_count: s.job_count(),
            avg_cost: s.avg_cost(),
        })
        .collect()
}

impl From<&ScheduleSet> for ScheduleReport {
    fn from(set: &ScheduleSet) -> Self {
        ScheduleReport {
            iteration: set.iteration,
            per_schedule: metrics(set),
            variance: set.variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ppsjbp,
    Offpsp,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppsjbp" => Ok(Algorithm::Ppsjbp),
            "offpsp" => Ok(Algorithm::Offpsp),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected ppsjbp|offpsp)"
            ))),
        }
    }
}

/// Echo of the configuration that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunParams {
    pub schedules: usize,
    pub jobs: usize,
    pub total_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_mode: Option<TieMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub job_order: Option<JobOrder>,
    /// Jobs with zero cost; the baseline places them first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_cost_jobs: Option<usize>,
    /// Set when allocations were injected rather than sampled.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_iteration: Option<usize>,
    pub per_schedule: Vec<ScheduleMetrics>,
    pub variance: f64,
    pub params: RunParams,
}

impl ComparisonReport {
    pub fn from_set(algorithm: Algorithm, set: &ScheduleSet, params: RunParams) -> Self {
        ComparisonReport {
            algorithm,
            selected_iteration: set.iteration,
            per_schedule: metrics(set),
            variance: set.variance,
            params,
        }
    }

    pub fn ppsjbp(pool: &JobPool, run: &PpsjbpRun, config: &PpsjbpConfig) -> Self {
        let params = RunParams {
            schedules: run.schedules.schedules.len(),
            jobs: pool.len(),
            total_cost: pool.total_cost(),
            iterations: Some(run.rra.as_ref().map_or(config.iterations, |r| r.iterations())),
            seed: Some(config.master_seed),
            tie_mode: Some(config.tie_mode),
            job_order: Some(config.job_order),
            ..Default::default()
        };
        ComparisonReport::from_set(Algorithm::Ppsjbp, &run.schedules, params)
    }

    pub fn offpsp(pool: &JobPool, set: &ScheduleSet, config: &OffpspConfig) -> Self {
        let params = RunParams {
            schedules: config.schedule_count,
            jobs: pool.len(),
            total_cost: pool.total_cost(),
            threshold: Some(config.threshold),
            zero_cost_jobs: Some(zero_cost_jobs(pool)),
            ..Default::default()
        };
        ComparisonReport::from_set(Algorithm::Offpsp, set, params)
    }

    pub fn totals(&self) -> Vec<f64> {
        self.per_schedule.iter().map(|m| m.total_cost).collect()
    }

    pub fn job_counts(&self) -> Vec<usize> {
        self.per_schedule.iter().map(|m| m.job_count).collect()
    }

    /// Job counts sum to the pool size and totals to the pool's cost.
    pub fn check_invariants(&self, pool: &JobPool) -> Result<()> {
        let jobs: usize = self.job_counts().iter().sum();
        if jobs != pool.len() {
            return Err(Error::Integrity(format!(
                "report covers {jobs} jobs, pool has {}",
                pool.len()
            )));
        }
        let total: f64 = self.totals().iter().sum();
        let expected = pool.total_cost();
        if (total - expected).abs() > REL_TOLERANCE * expected.abs().max(1.0) {
            return Err(Error::Integrity(format!(
                "report totals sum to {total}, pool costs {expected}"
            )));
        }
        Ok(())
    }
}

/// One row of the side-by-side table, by position in each algorithm's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideBySideRow {
    pub position: usize,
    pub ppsjbp_total_cost: f64,
    pub offpsp_total_cost: f64,
    pub ppsjbp_avg_cost: Option<f64>,
    pub offpsp_avg_cost: Option<f64>,
    pub ppsjbp_job_count: usize,
    pub offpsp_job_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub ppsjbp: ComparisonReport,
    pub offpsp: ComparisonReport,
    pub side_by_side: Vec<SideBySideRow>,
    /// Baseline variance over balanced variance; `None` when the latter is 0.
    pub variance_ratio: Option<f64>,
}

/// Stream index used to derive the balanced run's seed from a compare seed.
const PPSJBP_STREAM: u64 = 1;

/// Runs both algorithms on the same pool.
///
/// The allocator's master seed is derived from `seed`, so its result is
/// reproducible on its own with that derived seed.
pub fn compare(
    pool: &JobPool,
    horizon: &TimeHorizon,
    config: &PpsjbpConfig,
    seed: u64,
    threshold: Option<f64>,
) -> Result<CompareReport> {
    let l = horizon.schedule_count()?;
    let ppsjbp_config = PpsjbpConfig {
        master_seed: rng::derive_seed(seed, PPSJBP_STREAM),
        ..config.clone()
    };
    let run = run_ppsjbp_detailed(pool, horizon, &ppsjbp_config)?;
    let mut off_config = OffpspConfig::for_pool(pool, l);
    off_config.duration = horizon.unit;
    if let Some(t) = threshold {
        off_config.threshold = t;
    }
    let off = run_offpsp(pool, &off_config)?;

    let ppsjbp = ComparisonReport::ppsjbp(pool, &run, &ppsjbp_config);
    let offpsp = ComparisonReport::offpsp(pool, &off, &off_config);
    let side_by_side = ppsjbp
        .per_schedule
        .iter()
        .zip(&offpsp.per_schedule)
        .enumerate()
        .map(|(i, (p, o))| SideBySideRow {
            position: i + 1,
            ppsjbp_total_cost: p.total_cost,
            offpsp_total_cost: o.total_cost,
            ppsjbp_avg_cost: p.avg_cost,
            offpsp_avg_cost: o.avg_cost,
            ppsjbp_job_count: p.job_count,
            offpsp_job_count: o.job_count,
        })
        .collect();
    let variance_ratio = (ppsjbp.variance > 0.0).then(|| offpsp.variance / ppsjbp.variance);
    Ok(CompareReport {
        ppsjbp,
        offpsp,
        side_by_side,
        variance_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSetComparison {
    pub balanced: ScheduleReport,
    /// First `k'` non-winning iterations drawn at random.
    pub first_draw: Vec<ScheduleReport>,
    /// A further `k'`, disjoint from the first draw.
    pub second_draw: Vec<ScheduleReport>,
    pub params: RunParams,
}

impl RandomSetComparison {
    pub fn others(&self) -> impl Iterator<Item = &ScheduleReport> {
        self.first_draw.iter().chain(&self.second_draw)
    }

    /// The balanced set's variance does not exceed any drawn set's.
    pub fn balanced_is_minimal(&self) -> bool {
        self.others().all(|o| self.balanced.variance <= o.variance)
    }
}

/// Balanced set next to `2 k'` random non-winning sets from the same run.
pub fn random_set_comparison(
    pool: &JobPool,
    horizon: &TimeHorizon,
    config: &PpsjbpConfig,
    k_prime: usize,
) -> Result<RandomSetComparison> {
    if k_prime == 0 {
        return Err(Error::Config("k' must be at least 1".into()));
    }
    if config.iterations <= 2 * k_prime {
        return Err(Error::Config(format!(
            "need more than 2k' = {} iterations, got {}",
            2 * k_prime,
            config.iterations
        )));
    }
    if horizon.schedule_count()? < 2 {
        return Err(Error::Config("random set comparison needs at least 2 schedules".into()));
    }
    let run = run_ppsjbp_detailed(pool, horizon, config)?;
    let output = run.rra.as_ref().expect("sampled run for >= 2 schedules");
    let winner = run.selected_iteration;

    let mut picker = rng::stream(rng::derive_seed(config.master_seed, u64::MAX), 0);
    let picks: Vec<usize> = index::sample(&mut picker, config.iterations - 1, 2 * k_prime)
        .into_iter()
        .map(|i| if i >= winner { i + 1 } else { i })
        .collect();
    let report_for = |k: usize| -> Result<ScheduleReport> {
        let set = output.allocation(pool, k)?.to_schedule_set(pool, horizon.unit, Some(k));
        Ok(ScheduleReport::from(&set))
    };
    let drawn: Vec<ScheduleReport> = picks.iter().map(|&k| report_for(k)).collect::<Result<_>>()?;
    let (first, second) = drawn.split_at(k_prime);
    Ok(RandomSetComparison {
        balanced: ScheduleReport::from(&run.schedules),
        first_draw: first.to_vec(),
        second_draw: second.to_vec(),
        params: RunParams {
            schedules: run.schedules.schedules.len(),
            jobs: pool.len(),
            total_cost: pool.total_cost(),
            iterations: Some(config.iterations),
            seed: Some(config.master_seed),
            tie_mode: Some(config.tie_mode),
            job_order: Some(config.job_order),
            ..Default::default()
        },
    })
}

/// `%g`-style rendering with six significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&format_number(f));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Sorted-key JSON with fixed float formatting.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    let mut out = String::new();
    write_canonical(&value, &mut out);
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Writes `index,total_cost,job_count,avg_cost` rows in report order.
pub fn write_schedule_csv(path: &Path, rows: &[ScheduleMetrics]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["position", "index", "total_cost", "job_count", "avg_cost"])?;
    for (i, m) in rows.iter().enumerate() {
        wtr.write_record([
            (i + 1).to_string(),
            m.index.to_string(),
            format_number(m.total_cost),
            m.job_count.to_string(),
            opt(m.avg_cost),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_side_by_side_csv(path: &Path, rows: &[SideBySideRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record([
        "position",
        "ppsjbp_total_cost",
        "offpsp_total_cost",
        "ppsjbp_avg_cost",
        "offpsp_avg_cost",
        "ppsjbp_job_count",
        "offpsp_job_count",
    ])?;
    for r in rows {
        wtr.write_record([
            r.position.to_string(),
            format_number(r.ppsjbp_total_cost),
            format_number(r.offpsp_total_cost),
            opt(r.ppsjbp_avg_cost),
            opt(r.offpsp_avg_cost),
            r.ppsjbp_job_count.to_string(),
            r.offpsp_job_count.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One row per reported set: `group,iteration,variance,total_1..total_l`.
pub fn write_random_sets_csv(path: &Path, cmp: &RandomSetComparison) -> Result<()> {
    let l = cmp.balanced.per_schedule.len();
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["group".to_string(), "iteration".into(), "variance".into()];
    header.extend((1..=l).map(|i| format!("total_{i}")));
    wtr.write_record(&header)?;
    let groups = std::iter::once(("balanced", &cmp.balanced))
        .chain(cmp.first_draw.iter().map(|r| ("first_draw", r)))
        .chain(cmp.second_draw.iter().map(|r| ("second_draw", r)));
    for (group, r) in groups {
        let mut row = vec![
            group.to_string(),
            r.iteration.map(|k| k.to_string()).unwrap_or_default(),
            format_number(r.variance),
        ];
        row.extend(r.per_schedule.iter().map(|m| format_number(m.total_cost)));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
