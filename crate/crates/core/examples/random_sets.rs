//! The selected set next to eight random sets from the same run.
//!
//!     cargo run --release --example random_sets

use balsched::datasets::{generate_synthetic, SyntheticSpec};
use balsched::report::random_set_comparison;
use balsched::{PpsjbpConfig, TimeHorizon};

fn main() -> balsched::Result<()> {
    let pool = generate_synthetic(&SyntheticSpec {
        count: 200,
        seed: 9,
        ..Default::default()
    })?;
    let horizon = TimeHorizon::with_schedule_count(4)?;
    let cmp = random_set_comparison(&pool, &horizon, &PpsjbpConfig::new(8000, 9), 4)?;

    let show = |label: &str, r: &balsched::report::ScheduleReport| {
        let totals: Vec<f64> = r.per_schedule.iter().map(|m| m.total_cost).collect();
        println!(
            "{label:<8} iteration {:>5}  variance {:>10.1}  totals {totals:?}",
            r.iteration.unwrap_or(0),
            r.variance
        );
    };
    show("balanced", &cmp.balanced);
    for r in &cmp.first_draw {
        show("draw 1", r);
    }
    for r in &cmp.second_draw {
        show("draw 2", r);
    }
    println!("balanced is minimal: {}", cmp.balanced_is_minimal());
    Ok(())
}
