use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::JobPool;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub count: usize,
    pub cost_min: u64,
    pub cost_max: u64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            count: 200,
            cost_min: 1,
            cost_max: 100,
            seed: 0,
        }
    }
}

/// `count` jobs `γ_1 ..` with integer costs uniform in `[cost_min, cost_max]`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<JobPool> {
    if spec.count == 0 {
        return Err(Error::Config("synthetic pool needs at least one job".into()));
    }
    if spec.cost_min == 0 || spec.cost_min > spec.cost_max {
        return Err(Error::Config(format!(
            "cost range [{}, {}] must be positive and ordered",
            spec.cost_min, spec.cost_max
        )));
    }
    let mut rng = rng::stream_from_seed(spec.seed);
    JobPool::from_costs((0..spec.count).map(|_| rng.gen_range(spec.cost_min..=spec.cost_max) as f64))
}
