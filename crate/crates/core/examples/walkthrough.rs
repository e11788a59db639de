//! The six-job pool pushed through each stage with fixed allocations.
//!
//!     cargo run --example walkthrough

use balsched::ppsjbp::{row_variances, rra_from_allocations};
use balsched::{lcsf, mbdf, AllocationRun, JobPool, TieMode};

fn main() -> balsched::Result<()> {
    let pool = JobPool::from_costs([4.0, 2.0, 8.0, 1.0, 9.0, 15.0])?;
    let rows: [[usize; 6]; 5] = [
        [1, 3, 1, 2, 2, 1],
        [1, 3, 1, 2, 2, 3],
        [1, 3, 3, 3, 1, 2],
        [1, 2, 1, 2, 2, 3],
        [1, 1, 1, 2, 2, 3],
    ];
    let runs: Vec<AllocationRun> = rows
        .iter()
        .map(|r| AllocationRun {
            schedule_count: 3,
            slots: r.iter().map(|s| s - 1).collect(),
        })
        .collect();
    let chosen = runs.clone();

    let out = rra_from_allocations(&pool, 3, runs)?;
    println!("iteration  totals          variance");
    for (k, (row, var)) in out
        .cost_matrix
        .iter_rows()
        .zip(row_variances(&out.cost_matrix)?)
        .enumerate()
    {
        println!("{:>9}  {:<14}  {var}", k + 1, format!("{row:?}"));
    }

    let (best, var) = mbdf(&out.cost_matrix, TieMode::Paper)?;
    println!("\nminimum variance {var} at iteration {}", best + 1);

    let set = lcsf(chosen[best].to_schedule_set(&pool, 1.0, Some(best)));
    for s in &set.schedules {
        println!("schedule {}: {:?} total {}", s.index, s.job_ids, s.total_cost);
    }
    Ok(())
}
