//! Balanced partitioning of costed jobs into equal-duration schedules.
//!
//! The main entry point is [`run_ppsjbp`]: it draws `K` uniform random
//! allocations of the pool, keeps the one whose schedule totals have the
//! smallest sample variance, and orders its schedules by decreasing cost.
//! [`run_offpsp`] is a threshold-greedy baseline to compare against, and
//! [`verification`] checks the allocator's load guarantees by simulation.
//!
//! ```
//! use balsched::{run_ppsjbp, JobPool, PpsjbpConfig, TimeHorizon};
//!
//! let pool = JobPool::from_costs([4.0, 2.0, 8.0, 1.0, 9.0, 15.0]).unwrap();
//! let horizon = TimeHorizon::with_schedule_count(3).unwrap();
//! let set = run_ppsjbp(&pool, &horizon, &PpsjbpConfig::new(2000, 7)).unwrap();
//! set.validate(&pool).unwrap();
//! assert!(set.totals().windows(2).all(|w| w[0] >= w[1]));
//! ```
//!
//! Runnable examples live in `examples/`:
//!
//! - `walkthrough`: the six-job pool with fixed allocations, stage by stage
//! - `compare_baseline`: both algorithms on a synthetic pool
//! - `ingest_datasets`: bus runs and course logs to job pools
//! - `verify_lemmas`: the Monte Carlo suite
//! - `random_sets`: the balanced set against random draws
//! - `parallel_determinism`: identical output across thread counts

pub mod cli;
pub mod datasets;
pub mod error;
pub mod model;
pub mod offpsp;
pub mod ppsjbp;
pub mod report;
pub mod rng;
pub mod verification;

pub use error::{Error, Result};
pub use model::{AllocationRun, CostMatrix, Job, JobPool, Schedule, ScheduleSet, TimeHorizon};
pub use offpsp::{run_offpsp, OffpspConfig};
pub use ppsjbp::{lcsf, mbdf, rra, run_ppsjbp, JobOrder, PpsjbpConfig, RraConfig, RraOutput, TieMode};
