use balsched::ppsjbp::{row_variances, run_ppsjbp_detailed};
use balsched::report::{format_number, to_canonical_json};
use balsched::{
    rra, run_offpsp, run_ppsjbp, JobOrder, JobPool, OffpspConfig, PpsjbpConfig, RraConfig, TieMode, TimeHorizon,
};
use proptest::prelude::*;

fn oracle_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn costs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..500, 1..40).prop_map(|v| v.into_iter().map(f64::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ppsjbp_output_is_an_ordered_partition(
        costs in costs(),
        l in 1usize..7,
        k in 1usize..60,
        seed in any::<u64>(),
        shuffled in any::<bool>(),
    ) {
        let pool = JobPool::from_costs(costs).unwrap();
        let horizon = TimeHorizon::with_schedule_count(l).unwrap();
        let mut config = PpsjbpConfig::new(k, seed);
        config.job_order = if shuffled { JobOrder::Shuffled } else { JobOrder::Pool };
        let set = run_ppsjbp(&pool, &horizon, &config).unwrap();
        set.validate(&pool).unwrap();
        prop_assert_eq!(set.schedules.len(), l);
        let totals = set.totals();
        prop_assert!(totals.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(close(totals.iter().sum(), pool.total_cost()));
    }

    #[test]
    fn cost_matrix_rows_conserve_cost(costs in costs(), l in 1usize..7, k in 1usize..40, seed in any::<u64>()) {
        let pool = JobPool::from_costs(costs).unwrap();
        let out = rra(&pool, &RraConfig::new(k, l, seed)).unwrap();
        prop_assert_eq!(out.cost_matrix.rows(), k);
        for row in out.cost_matrix.iter_rows() {
            prop_assert!(close(row.iter().sum(), pool.total_cost()));
        }
    }

    #[test]
    fn selection_is_the_minimum_row(costs in costs(), l in 2usize..6, k in 1usize..80, seed in any::<u64>()) {
        let pool = JobPool::from_costs(costs).unwrap();
        let horizon = TimeHorizon::with_schedule_count(l).unwrap();
        let run = run_ppsjbp_detailed(&pool, &horizon, &PpsjbpConfig::new(k, seed)).unwrap();
        let matrix = &run.rra.as_ref().unwrap().cost_matrix;
        let best = matrix.iter_rows().map(oracle_variance).fold(f64::INFINITY, f64::min);
        prop_assert!(close(run.schedules.variance, best));
        prop_assert!(close(oracle_variance(&run.schedules.totals()), best));
        let variances = row_variances(matrix).unwrap();
        prop_assert!(variances.iter().all(|&v| run.schedules.variance <= v));
    }

    #[test]
    fn more_iterations_never_worsen(costs in costs(), l in 2usize..6, k in 1usize..60, extra in 0usize..60, seed in any::<u64>()) {
        let pool = JobPool::from_costs(costs).unwrap();
        let horizon = TimeHorizon::with_schedule_count(l).unwrap();
        let short = run_ppsjbp(&pool, &horizon, &PpsjbpConfig::new(k, seed)).unwrap();
        let long = run_ppsjbp(&pool, &horizon, &PpsjbpConfig::new(k + extra, seed)).unwrap();
        prop_assert!(long.variance <= short.variance);
    }

    #[test]
    fn default_tie_mode_keeps_last_minimum(costs in costs(), l in 2usize..5, k in 1usize..40, seed in any::<u64>()) {
        let pool = JobPool::from_costs(costs).unwrap();
        let out = rra(&pool, &RraConfig::new(k, l, seed)).unwrap();
        let variances = row_variances(&out.cost_matrix).unwrap();
        let (last, _) = balsched::mbdf(&out.cost_matrix, TieMode::Paper).unwrap();
        let (first, _) = balsched::mbdf(&out.cost_matrix, TieMode::First).unwrap();
        let min = variances.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(first, variances.iter().position(|&v| v == min).unwrap());
        prop_assert_eq!(last, variances.iter().rposition(|&v| v == min).unwrap());
    }

    #[test]
    fn worker_count_does_not_change_results(costs in costs(), l in 1usize..6, k in 1usize..50, seed in any::<u64>()) {
        let pool = JobPool::from_costs(costs).unwrap();
        let horizon = TimeHorizon::with_schedule_count(l).unwrap();
        let mut config = PpsjbpConfig::new(k, seed);
        config.threads = Some(1);
        let one = run_ppsjbp(&pool, &horizon, &config).unwrap();
        config.threads = Some(3);
        let three = run_ppsjbp(&pool, &horizon, &config).unwrap();
        config.threads = None;
        config.retain_all = true;
        let retained = run_ppsjbp(&pool, &horizon, &config).unwrap();
        prop_assert_eq!(&one, &three);
        prop_assert_eq!(&one, &retained);
    }

    #[test]
    fn offpsp_closes_schedules_after_one_violation(
        costs in costs(),
        l in 1usize..6,
        threshold in 1.0f64..400.0,
    ) {
        let pool = JobPool::from_costs(costs).unwrap();
        let set = run_offpsp(&pool, &OffpspConfig::for_pool(&pool, l).with_threshold(threshold)).unwrap();
        set.validate(&pool).unwrap();
        let s = &set.schedules;
        for i in 0..s.len().saturating_sub(1) {
            if s[i + 1].job_ids.is_empty() {
                continue;
            }
            let last = pool.get(s[i].job_ids.last().unwrap()).unwrap().cost;
            prop_assert!(s[i].total_cost > threshold);
            prop_assert!(s[i].total_cost - last <= threshold);
        }
        // filling order is non-decreasing in cost
        let order: Vec<f64> = s.iter().flat_map(|x| &x.job_ids).map(|id| pool.get(id).unwrap().cost).collect();
        prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn number_format_keeps_six_significant_digits(x in -1e12f64..1e12) {
        let text = format_number(x);
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs() + 1e-300, "{} -> {}", x, text);
        let digits = text.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 6, "{}", text);
    }

    #[test]
    fn canonical_json_is_stable_and_sorted(keys in prop::collection::btree_set("[a-z]{1,6}", 1..8), seed in any::<u32>()) {
        let mut map = serde_json::Map::new();
        for (i, k) in keys.iter().enumerate() {
            map.insert(k.clone(), serde_json::json!(f64::from(seed) / (i as f64 + 3.0)));
        }
        let value = serde_json::Value::Object(map);
        let a = to_canonical_json(&value).unwrap();
        let b = to_canonical_json(&serde_json::from_str::<serde_json::Value>(&a).unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        let order: Vec<&String> = parsed.as_object().unwrap().keys().collect();
        prop_assert!(order.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn slots_are_uniform() {
    let l = 5;
    let k = 50_000;
    let pool = JobPool::from_costs([1.0]).unwrap();
    let out = rra(&pool, &RraConfig::new(k, l, 2024)).unwrap();
    let mut counts = vec![0usize; l];
    for row in out.cost_matrix.iter_rows() {
        counts[row.iter().position(|&c| c == 1.0).unwrap()] += 1;
    }
    let p = 1.0 / l as f64;
    let sd = (k as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - k as f64 * p).abs() <= 4.0 * sd, "{c}");
    }
}

#[test]
fn brute_force_three_schedules() {
    let costs = [7.0, 3.0, 5.0, 11.0, 2.0, 6.0];
    let l = 3usize;
    let mut best = f64::INFINITY;
    for code in 0..l.pow(costs.len() as u32) {
        let mut totals = [0.0; 3];
        let mut c = code;
        for cost in costs {
            totals[c % l] += cost;
            c /= l;
        }
        best = best.min(oracle_variance(&totals));
    }
    let pool = JobPool::from_costs(costs).unwrap();
    let horizon = TimeHorizon::with_schedule_count(l).unwrap();
    let set = run_ppsjbp(&pool, &horizon, &PpsjbpConfig::new(20 * 729, 5)).unwrap();
    assert!(close(set.variance, best), "{} vs {best}", set.variance);
}
