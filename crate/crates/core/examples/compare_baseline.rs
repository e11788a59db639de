//! Balanced allocation against the threshold-greedy baseline on a
//! synthetic pool of 200 jobs over four schedules.
//!
//!     cargo run --release --example compare_baseline

use balsched::datasets::{generate_synthetic, SyntheticSpec};
use balsched::report::compare;
use balsched::{PpsjbpConfig, TimeHorizon};

fn main() -> balsched::Result<()> {
    let pool = generate_synthetic(&SyntheticSpec {
        count: 200,
        seed: 42,
        ..Default::default()
    })?;
    let horizon = TimeHorizon::with_schedule_count(4)?;
    let cmp = compare(&pool, &horizon, &PpsjbpConfig::new(8000, 0), 42, None)?;

    println!("pos  ppsjbp total/jobs/avg      offpsp total/jobs/avg");
    for r in &cmp.side_by_side {
        println!(
            "{:>3}  {:>6} {:>4} {:>8.2}      {:>6} {:>4} {:>8.2}",
            r.position,
            r.ppsjbp_total_cost,
            r.ppsjbp_job_count,
            r.ppsjbp_avg_cost.unwrap_or(f64::NAN),
            r.offpsp_total_cost,
            r.offpsp_job_count,
            r.offpsp_avg_cost.unwrap_or(f64::NAN),
        );
    }
    println!(
        "\nvariance ppsjbp {:.1}, offpsp {:.1}",
        cmp.ppsjbp.variance, cmp.offpsp.variance
    );
    if let Some(ratio) = cmp.variance_ratio {
        println!("offpsp / ppsjbp = {ratio:.0}");
    }
    Ok(())
}
