use std::fs;
use std::path::{Path, PathBuf};

use balsched::cli::{run, EXIT_INPUT, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn balsched(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("balsched").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synthetic_jobs(dir: &Path, count: usize) -> PathBuf {
    let file = dir.join("jobs.csv");
    let count = count.to_string();
    let (code, _, err) = balsched(&["generate", "--count", &count, "--seed", "3", "--out", path(&file)]);
    assert_eq!(code, EXIT_OK, "{err}");
    file
}

#[test]
fn injected_schedule_matches_golden() {
    let (code, out, err) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("six_job_pool.csv")),
        "--schedules",
        "3",
        "--inject-assignments",
        path(&fixture("six_job_assignments.csv")),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(
        out,
        fs::read_to_string(fixture("golden_six_job_injected.json")).unwrap()
    );
}

#[test]
fn baseline_schedule_matches_golden() {
    let (code, out, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("threshold_trace_pool.csv")),
        "--schedules",
        "2",
        "--algo",
        "offpsp",
        "--threshold",
        "55",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        out,
        fs::read_to_string(fixture("golden_threshold_trace_offpsp.json")).unwrap()
    );
}

#[test]
fn first_tie_mode_can_pick_a_different_row() {
    let dir = tempfile::tempdir().unwrap();
    let inject = dir.path().join("ties.csv");
    // rows 1 and 2 are mirror images with equal variance
    fs::write(
        &inject,
        "iteration,job_id,schedule\n1,γ_1,1\n1,γ_2,2\n2,γ_1,2\n2,γ_2,1\n",
    )
    .unwrap();
    let jobs = dir.path().join("jobs.csv");
    fs::write(&jobs, "id,cost\nγ_1,3\nγ_2,5\n").unwrap();
    let pick = |mode: &str| {
        let (code, out, err) = balsched(&[
            "schedule",
            "--jobs",
            path(&jobs),
            "--schedules",
            "2",
            "--inject-assignments",
            path(&inject),
            "--tie-mode",
            mode,
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        serde_json::from_str::<Value>(&out).unwrap()["selected_iteration"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(pick("paper"), 1);
    assert_eq!(pick("first"), 0);
}

#[test]
fn schedule_report_invariants_hold() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = synthetic_jobs(dir.path(), 200);
    let csv_dir = dir.path().join("tables");
    let (code, out, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&jobs),
        "--schedules",
        "4",
        "--iterations",
        "2000",
        "--csv",
        path(&csv_dir),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let per = v["per_schedule"].as_array().unwrap();
    let counts: u64 = per.iter().map(|m| m["job_count"].as_u64().unwrap()).sum();
    assert_eq!(counts, 200);
    let totals: Vec<f64> = per.iter().map(|m| m["total_cost"].as_f64().unwrap()).collect();
    assert!(totals.windows(2).all(|w| w[0] >= w[1]));
    let table = fs::read_to_string(csv_dir.join("schedules.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn horizon_flags() {
    let jobs = fixture("six_job_pool.csv");
    let run_h = |extra: &[&str]| {
        let mut args = vec!["schedule", "--jobs", path(&jobs), "--iterations", "50"];
        args.extend_from_slice(extra);
        balsched(&args)
    };
    let (code, out, _) = run_h(&["--start", "0", "--finish", "21", "--unit", "7"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["per_schedule"].as_array().unwrap().len(), 3);

    let (code, _, err) = run_h(&["--start", "0", "--finish", "20", "--unit", "7"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("20"), "{err}");

    let (code, _, _) = run_h(&[]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn single_schedule_takes_everything() {
    let (code, out, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("six_job_pool.csv")),
        "--schedules",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["per_schedule"][0]["job_count"], 6);
    assert_eq!(v["variance"], 0);
}

#[test]
fn exit_codes() {
    let (code, _, err) = balsched(&[]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));

    let (code, _, _) = balsched(&["schedule", "--jobs", "/nonexistent/jobs.csv", "--schedules", "2"]);
    assert_eq!(code, EXIT_INPUT);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,cost\na,1\nb,oops\n").unwrap();
    let (code, _, err) = balsched(&["schedule", "--jobs", path(&bad), "--schedules", "2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains(":3:"), "{err}");

    let (code, _, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("six_job_pool.csv")),
        "--schedules",
        "0",
    ]);
    assert_eq!(code, EXIT_USAGE);

    let (code, _, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("six_job_pool.csv")),
        "--schedules",
        "2",
        "--algo",
        "greedy",
    ]);
    assert_eq!(code, EXIT_USAGE);

    let (code, _, _) = balsched(&[
        "schedule",
        "--jobs",
        path(&fixture("six_job_pool.csv")),
        "--schedules",
        "2",
        "--algo",
        "offpsp",
        "--threshold",
        "-1",
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn compare_reports_both_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = dir.path().join("equal.csv");
    fs::write(&jobs, "id,cost\na,5\nb,5\nc,5\nd,5\n").unwrap();
    // a budget below one job's cost closes every schedule after one job
    let csv_dir = dir.path().join("out");
    let (code, out, _) = balsched(&[
        "compare",
        "--jobs",
        path(&jobs),
        "--schedules",
        "4",
        "--iterations",
        "2000",
        "--threshold",
        "4",
        "--csv",
        path(&csv_dir),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["ppsjbp"]["variance"], 0);
    assert_eq!(v["offpsp"]["variance"], 0);
    assert!(v["variance_ratio"].is_null());
    assert_eq!(v["side_by_side"].as_array().unwrap().len(), 4);
    for name in ["ppsjbp.csv", "offpsp.csv", "side_by_side.csv"] {
        assert!(csv_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn compare_seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = synthetic_jobs(dir.path(), 40);
    let args = [
        "compare",
        "--jobs",
        path(&jobs),
        "--schedules",
        "4",
        "--iterations",
        "500",
    ];
    let with_flag = {
        let mut a = args.to_vec();
        a.extend(["--seed", "99"]);
        balsched(&a).1
    };
    std::env::set_var("BALSCHED_SEED", "99");
    let from_env = balsched(&args).1;
    std::env::remove_var("BALSCHED_SEED");
    assert_eq!(with_flag, from_env);
}

#[test]
fn random_sets_boundary_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = synthetic_jobs(dir.path(), 30);
    let csv_dir = dir.path().join("rs");
    let (code, out, err) = balsched(&[
        "random-sets",
        "--jobs",
        path(&jobs),
        "--schedules",
        "4",
        "--iterations",
        "9",
        "--k-prime",
        "4",
        "--csv",
        path(&csv_dir),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["first_draw"].as_array().unwrap().len(), 4);
    assert_eq!(v["second_draw"].as_array().unwrap().len(), 4);
    let balanced = v["balanced"]["variance"].as_f64().unwrap();
    for r in v["first_draw"]
        .as_array()
        .unwrap()
        .iter()
        .chain(v["second_draw"].as_array().unwrap())
    {
        assert!(balanced <= r["variance"].as_f64().unwrap());
    }
    assert_eq!(
        fs::read_to_string(csv_dir.join("random_sets.csv"))
            .unwrap()
            .lines()
            .count(),
        10
    );

    let (code, _, _) = balsched(&[
        "random-sets",
        "--jobs",
        path(&jobs),
        "--schedules",
        "4",
        "--iterations",
        "8",
        "--k-prime",
        "4",
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn verify_single_lemmas() {
    let (code, out, err) = balsched(&[
        "verify",
        "--lemma",
        "L2",
        "--n",
        "200",
        "--schedules",
        "4",
        "--scale",
        "0.25",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["lemma_id"], "L2");
    assert_eq!(v["predicted"], 50);
    assert!(err.contains("PASS"));

    let (code, out, _) = balsched(&["verify", "--lemma", "l3", "--schedules", "1", "--scale", "0.01"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["predicted"], 1);
    assert_eq!(v["observed"], 1);

    let (code, _, _) = balsched(&["verify", "--lemma", "L7"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn verify_reports_failure_with_exit_one() {
    // One trial of a one-job tail event observes 0 or 1 against a bound of
    // about 0.96, so some seeds must fail.
    let outcomes: Vec<(i32, Value)> = (0..10)
        .map(|seed| {
            let seed = seed.to_string();
            let (code, out, _) = balsched(&[
                "verify",
                "--lemma",
                "L4",
                "--n",
                "1",
                "--schedules",
                "2",
                "--scale",
                "0.00005",
                "--seed",
                &seed,
            ]);
            (code, serde_json::from_str(out.trim()).unwrap())
        })
        .collect();
    assert!(outcomes.iter().any(|(code, _)| *code == EXIT_VERIFY_FAILED));
    for (code, v) in outcomes {
        assert_eq!(v["trials"], 1);
        let failed = v["observed"].as_f64().unwrap() > v["predicted"].as_f64().unwrap();
        assert_eq!(code == EXIT_VERIFY_FAILED, failed);
    }
}

#[test]
fn ingest_commands_write_pools() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("bus_jobs.csv");
    let (code, _, err) = balsched(&[
        "ingest-bus",
        "--input",
        path(&fixture("bus_fixture.csv")),
        "--out",
        path(&out_file),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("\"rows_read\":20"), "{err}");
    assert!(fs::read_to_string(&out_file).unwrap().contains("1,1145"));

    let (code, out, _) = balsched(&[
        "ingest-kdd",
        "--input",
        path(&fixture("kdd_fixture.csv")),
        "--top-students",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("81UZ:navigate,10"));

    let (code, _, _) = balsched(&["ingest-kdd", "--input", path(&fixture("bus_fixture.csv"))]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn bench_reports_ratio() {
    let (code, out, _) = balsched(&["bench", "--n", "50", "--iterations", "200,400", "--repeats", "1"]);
    assert!(code == EXIT_OK || code == EXIT_VERIFY_FAILED);
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["expected_ratio"], 2);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}
