//! Command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 when a verification fails, 2 for unreadable
//! input and 64 for bad usage.

use std::ffi::OsString;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::datasets::{self, IngestReport, Ingested, KddOptions, StreamMode, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::{AllocationRun, JobPool, TimeHorizon};
use crate::offpsp::{run_offpsp, OffpspConfig};
use crate::ppsjbp::{
    finish_ppsjbp, rra_from_allocations, run_ppsjbp_detailed, JobOrder, PpsjbpConfig, TieMode, DEFAULT_ITERATIONS,
};
use crate::report::{self, Algorithm, ComparisonReport};
use crate::verification::{self, LemmaId, LemmaReport, SecretaryConfig, VerifyScale};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "balsched",
    version,
    about = "Balanced scheduling of costed jobs",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic job pool as CSV.
    Generate(GenerateArgs),
    /// Turn bus driver run records into a job pool.
    IngestBus(IngestBusArgs),
    /// Turn course activity logs into a job pool.
    IngestKdd(IngestKddArgs),
    /// Partition a pool with one algorithm.
    Schedule(ScheduleArgs),
    /// Run both algorithms on the same pool.
    Compare(CompareArgs),
    /// Report the balanced set next to randomly drawn non-winning sets.
    RandomSets(RandomSetsArgs),
    /// Monte Carlo checks of the load and selection guarantees.
    Verify(VerifyArgs),
    /// Time the allocation stage at several iteration counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    #[arg(long, env = "BALSCHED_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    cost_min: u64,
    #[arg(long, default_value_t = 100)]
    cost_max: u64,
    #[command(flatten)]
    seed: SeedArg,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestBusArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestKddArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    top_students: usize,
    /// per-student | per-student-course
    #[arg(long, default_value = "per-student", value_parser = parse_stream)]
    stream: StreamMode,
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Job pool CSV with columns id,cost[,location].
    #[arg(long)]
    jobs: PathBuf,
    /// Keep only jobs at this location.
    #[arg(long)]
    location: Option<String>,
}

#[derive(Debug, Args)]
struct HorizonArgs {
    #[arg(long, conflicts_with_all = ["start", "finish"])]
    schedules: Option<usize>,
    #[arg(long, requires = "finish")]
    start: Option<f64>,
    #[arg(long, requires = "start")]
    finish: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    unit: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// paper | first
    #[arg(long, default_value = "paper", value_parser = parse_tie)]
    tie_mode: TieMode,
    /// pool | shuffled
    #[arg(long, default_value = "pool", value_parser = parse_order)]
    job_order: JobOrder,
    /// Keep every allocation in memory instead of replaying the winner.
    #[arg(long)]
    retain_all: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "ppsjbp", value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long)]
    threshold: Option<f64>,
    /// Test only: CSV `iteration,job_id,schedule` replacing random allocation.
    #[arg(long)]
    inject_assignments: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RandomSetsArgs {
    #[command(flatten)]
    pool: PoolArgs,
    #[command(flatten)]
    horizon: HorizonArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 4)]
    k_prime: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Lemma ids (L1..L4, C1); all when omitted.
    #[arg(long = "lemma", value_delimiter = ',', value_parser = parse_lemma)]
    lemmas: Vec<LemmaId>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    schedules: usize,
    /// Schedules and high-cost jobs for the concentration check.
    #[arg(long, default_value_t = 3)]
    l1_schedules: usize,
    #[arg(long, default_value_t = 3)]
    l1_jobs: u32,
    /// Iterations per run in the selection check.
    #[arg(long, default_value_t = 4000)]
    iterations: usize,
    /// Multiplier applied to every trial count.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Pool to time; a synthetic pool of `--n` jobs when omitted.
    #[arg(long)]
    jobs: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    schedules: usize,
    #[arg(long, value_delimiter = ',', default_value = "4000,8000")]
    iterations: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[command(flatten)]
    seed: SeedArg,
}

fn parse_tie(s: &str) -> std::result::Result<TieMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_stream(s: &str) -> std::result::Result<StreamMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_lemma(s: &str) -> std::result::Result<LemmaId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<JobOrder, String> {
    match s {
        "pool" => Ok(JobOrder::Pool),
        "shuffled" => Ok(JobOrder::Shuffled),
        other => Err(format!("unknown job order `{other}` (expected pool|shuffled)")),
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::DegenerateVariance(_) => EXIT_USAGE,
        Error::Integrity(_) => EXIT_VERIFY_FAILED,
        Error::Parse { .. } | Error::MissingColumn { .. } | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => {
            EXIT_INPUT
        }
    }
}

/// Parses `args` (program name first) and runs the chosen subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::IngestBus(a) => {
            let ingested = datasets::ingest_bus_driver(open(&a.input)?, &a.input.display().to_string())?;
            emit_pool(ingested, a.out.as_deref(), out, err)
        }
        Command::IngestKdd(a) => {
            let options = KddOptions {
                top_students: a.top_students,
                stream: a.stream,
            };
            let ingested = datasets::ingest_kdd_logs(open(&a.input)?, &a.input.display().to_string(), &options)?;
            emit_pool(ingested, a.out.as_deref(), out, err)
        }
        Command::Schedule(a) => schedule(a, out),
        Command::Compare(a) => compare(a, out),
        Command::RandomSets(a) => random_sets(a, out),
        Command::Verify(a) => verify(a, out, err),
        Command::Bench(a) => bench(a, out),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let pool = datasets::generate_synthetic(&SyntheticSpec {
        count: a.count,
        cost_min: a.cost_min,
        cost_max: a.cost_max,
        seed: a.seed.seed,
    })?;
    write_pool(&pool, a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn write_pool(pool: &JobPool, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => pool.write_csv(File::create(p).map_err(|e| Error::io(p, e))?),
        None => pool.write_csv(out),
    }
}

fn emit_pool(ingested: Ingested, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let Ingested { pool, report } = ingested;
    write_pool(&pool, path, out)?;
    let summary: &IngestReport = &report;
    let _ = writeln!(err, "{}", report::to_canonical_json(summary)?);
    Ok(EXIT_OK)
}

fn load_pool(a: &PoolArgs) -> Result<JobPool> {
    let pool = JobPool::read_csv_path(&a.jobs)?;
    let pool = match &a.location {
        Some(loc) => pool.filter_location(loc),
        None => pool,
    };
    if pool.is_empty() {
        return Err(Error::Config(format!("no jobs selected from {}", a.jobs.display())));
    }
    Ok(pool)
}

fn horizon(a: &HorizonArgs) -> Result<TimeHorizon> {
    match (a.schedules, a.start, a.finish) {
        (Some(l), _, _) => {
            let h = TimeHorizon::with_schedule_count(l)?;
            TimeHorizon::new(h.start, l as f64 * a.unit, a.unit)
        }
        (None, Some(start), Some(finish)) => TimeHorizon::new(start, finish, a.unit),
        _ => Err(Error::Config("give --schedules or both --start and --finish".into())),
    }
}

fn ppsjbp_config(a: &RunArgs) -> PpsjbpConfig {
    PpsjbpConfig {
        iterations: a.iterations,
        master_seed: a.seed.seed,
        tie_mode: a.tie_mode,
        job_order: a.job_order,
        retain_all: a.retain_all,
        threads: a.threads,
    }
}

/// Reads injected allocations: CSV `iteration,job_id,schedule`, both
/// numbers 1-based. Every iteration must place every job exactly once.
pub fn read_assignments<R: Read>(
    reader: R,
    source_name: &str,
    pool: &JobPool,
    schedules: usize,
) -> Result<Vec<AllocationRun>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                source_name: source_name.to_string(),
                column: name.to_string(),
            })
    };
    let (ic, jc, sc) = (col("iteration")?, col("job_id")?, col("schedule")?);

    let mut slots: Vec<Vec<Option<usize>>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        let iteration: usize = field(ic)
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::parse(source_name, line, format!("bad iteration `{}`", field(ic))))?;
        let job = pool
            .position(field(jc))
            .ok_or_else(|| Error::parse(source_name, line, format!("unknown job `{}`", field(jc))))?;
        let schedule: usize = field(sc)
            .parse()
            .ok()
            .filter(|s| (1..=schedules).contains(s))
            .ok_or_else(|| {
                Error::parse(
                    source_name,
                    line,
                    format!("schedule `{}` outside 1..={schedules}", field(sc)),
                )
            })?;
        if slots.len() < iteration {
            slots.resize(iteration, vec![None; pool.len()]);
        }
        let slot = &mut slots[iteration - 1][job];
        if slot.is_some() {
            return Err(Error::parse(
                source_name,
                line,
                format!("job `{}` assigned twice in iteration {iteration}", field(jc)),
            ));
        }
        *slot = Some(schedule - 1);
    }
    if slots.is_empty() {
        return Err(Error::parse(source_name, 1, "no assignments"));
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            let slots: Option<Vec<usize>> = row.into_iter().collect();
            slots
                .map(|slots| AllocationRun {
                    schedule_count: schedules,
                    slots,
                })
                .ok_or_else(|| Error::Integrity(format!("{source_name}: iteration {} does not place every job", k + 1)))
        })
        .collect()
}

fn schedule(a: ScheduleArgs, out: &mut dyn Write) -> Result<i32> {
    let pool = load_pool(&a.pool)?;
    let horizon = horizon(&a.horizon)?;
    let l = horizon.schedule_count()?;
    let report = match a.algo {
        Algorithm::Offpsp => {
            let mut config = OffpspConfig::for_pool(&pool, l);
            config.duration = horizon.unit;
            if let Some(t) = a.threshold {
                config.threshold = t;
            }
            let set = run_offpsp(&pool, &config)?;
            ComparisonReport::offpsp(&pool, &set, &config)
        }
        Algorithm::Ppsjbp => {
            let config = ppsjbp_config(&a.run);
            match &a.inject_assignments {
                Some(path) => {
                    let runs = read_assignments(open(path)?, &path.display().to_string(), &pool, l)?;
                    let output = rra_from_allocations(&pool, l, runs)?;
                    let run = finish_ppsjbp(&pool, &horizon, output, config.tie_mode)?;
                    let mut report = ComparisonReport::ppsjbp(&pool, &run, &config);
                    report.params.seed = None;
                    report.params.job_order = None;
                    report.params.injected = true;
                    report
                }
                None => ComparisonReport::ppsjbp(&pool, &run_ppsjbp_detailed(&pool, &horizon, &config)?, &config),
            }
        }
    };
    report.check_invariants(&pool)?;
    if let Some(dir) = &a.csv {
        report::ensure_dir(dir)?;
        report::write_schedule_csv(&dir.join("schedules.csv"), &report.per_schedule)?;
    }
    write_out(out, &report::to_canonical_json(&report)?)?;
    Ok(EXIT_OK)
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<i32> {
    let pool = load_pool(&a.pool)?;
    let horizon = horizon(&a.horizon)?;
    let cmp = report::compare(&pool, &horizon, &ppsjbp_config(&a.run), a.run.seed.seed, a.threshold)?;
    cmp.ppsjbp.check_invariants(&pool)?;
    cmp.offpsp.check_invariants(&pool)?;
    if let Some(dir) = &a.csv {
        report::ensure_dir(dir)?;
        report::write_schedule_csv(&dir.join("ppsjbp.csv"), &cmp.ppsjbp.per_schedule)?;
        report::write_schedule_csv(&dir.join("offpsp.csv"), &cmp.offpsp.per_schedule)?;
        report::write_side_by_side_csv(&dir.join("side_by_side.csv"), &cmp.side_by_side)?;
    }
    write_out(out, &report::to_canonical_json(&cmp)?)?;
    Ok(EXIT_OK)
}

fn random_sets(a: RandomSetsArgs, out: &mut dyn Write) -> Result<i32> {
    let pool = load_pool(&a.pool)?;
    let horizon = horizon(&a.horizon)?;
    let cmp = report::random_set_comparison(&pool, &horizon, &ppsjbp_config(&a.run), a.k_prime)?;
    if let Some(dir) = &a.csv {
        report::ensure_dir(dir)?;
        report::write_random_sets_csv(&dir.join("random_sets.csv"), &cmp)?;
    }
    write_out(out, &report::to_canonical_json(&cmp)?)?;
    Ok(if cmp.balanced_is_minimal() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn render_table(reports: &[LemmaReport]) -> String {
    let mut s = format!(
        "{:<6} {:>12} {:>12} {:>12} {:>9}  result\n",
        "lemma", "predicted", "observed", "tolerance", "trials"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<6} {:>12} {:>12} {:>12} {:>9}  {}\n",
            r.lemma_id.to_string(),
            report::format_number(r.predicted),
            report::format_number(r.observed),
            format!(
                "{}{}",
                if r.one_sided { "<=" } else { "±" },
                report::format_number(r.tolerance)
            ),
            r.trials,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

fn verify(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if !(a.scale.is_finite() && a.scale > 0.0) {
        return Err(Error::Config(format!("scale must be positive, got {}", a.scale)));
    }
    let ids = if a.lemmas.is_empty() {
        LemmaId::ALL.to_vec()
    } else {
        a.lemmas.clone()
    };
    let defaults = VerifyScale::default();
    let scale = VerifyScale {
        jobs: a.n,
        schedules: a.schedules,
        coupon_schedules: a.schedules,
        concentration_schedules: a.l1_schedules,
        concentration_jobs: a.l1_jobs,
        secretary: SecretaryConfig {
            iterations: a.iterations,
            ..defaults.secretary
        },
        ..defaults
    }
    .scaled(a.scale);

    let reports = verification::run_lemmas(&ids, &scale, a.seed.seed)?;
    for r in &reports {
        write_out(out, &report::to_canonical_json(r)?)?;
    }
    let _ = err.write_all(render_table(&reports).as_bytes());
    Ok(if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let pool = match &a.jobs {
        Some(path) => JobPool::read_csv_path(path)?,
        None => datasets::generate_synthetic(&SyntheticSpec {
            count: a.n,
            seed: a.seed.seed,
            ..Default::default()
        })?,
    };
    let scaling = verification::check_runtime_scaling(&pool, a.schedules, &a.iterations, a.repeats, a.seed.seed)?;
    write_out(out, &report::to_canonical_json(&scaling)?)?;
    Ok(if scaling.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("balsched").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn no_arguments_is_usage_error() {
        let (code, _, err) = run_args(&[]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_succeeds() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("schedule"));
    }

    #[test]
    fn unknown_lemma_is_usage_error() {
        let (code, _, _) = run_args(&["verify", "--lemma", "L9"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn assignment_errors_carry_line_numbers() {
        let pool = JobPool::from_costs([1.0, 2.0]).unwrap();
        let text = "iteration,job_id,schedule\n1,γ_1,1\n1,γ_9,2\n";
        let err = read_assignments(text.as_bytes(), "inj", &pool, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let text = "iteration,job_id,schedule\n1,γ_1,1\n1,γ_2,3\n";
        assert!(matches!(
            read_assignments(text.as_bytes(), "inj", &pool, 2),
            Err(Error::Parse { line: 3, .. })
        ));

        let text = "iteration,job_id,schedule\n1,γ_1,1\n";
        assert!(read_assignments(text.as_bytes(), "inj", &pool, 2).is_err());

        let text = "iteration,job_id,schedule\n2,γ_2,2\n1,γ_1,1\n1,γ_2,1\n2,γ_1,2\n";
        let runs = read_assignments(text.as_bytes(), "inj", &pool, 2).unwrap();
        assert_eq!(runs[0].slots, vec![0, 0]);
        assert_eq!(runs[1].slots, vec![1, 1]);
    }
}
