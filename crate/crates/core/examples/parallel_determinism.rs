//! Same seed, different worker counts, identical schedules.
//!
//!     cargo run --release --example parallel_determinism

use std::time::Instant;

use balsched::datasets::{generate_synthetic, SyntheticSpec};
use balsched::{run_ppsjbp, PpsjbpConfig, TimeHorizon};

fn main() -> balsched::Result<()> {
    let pool = generate_synthetic(&SyntheticSpec {
        count: 500,
        seed: 3,
        ..Default::default()
    })?;
    let horizon = TimeHorizon::with_schedule_count(6)?;
    let mut reference = None;
    for threads in [1, 2, 4, 8] {
        let mut config = PpsjbpConfig::new(20_000, 3);
        config.threads = Some(threads);
        let start = Instant::now();
        let set = run_ppsjbp(&pool, &horizon, &config)?;
        println!(
            "{threads} worker(s): iteration {:?}, variance {:.3}, {:.0} ms",
            set.iteration,
            set.variance,
            start.elapsed().as_secs_f64() * 1e3
        );
        match &reference {
            None => reference = Some(set),
            Some(r) => assert_eq!(r, &set),
        }
    }
    println!("all runs identical");
    Ok(())
}
