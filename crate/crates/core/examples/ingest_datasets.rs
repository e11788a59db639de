//! Bus run records and course activity logs turned into job pools.
//!
//!     cargo run --example ingest_datasets

use balsched::datasets::{ingest_bus_driver, ingest_kdd_logs, KddOptions};
use balsched::{run_ppsjbp, PpsjbpConfig, TimeHorizon};

const BUS: &str = "\
Run_Id;Bus_Line_Id;Start_Time;Duration
1;12;05:30;2:10
2;7;05:40;95
3;12;06:20;140.5
4;31;06:30;1:05:30
5;7;07:00;-3
";

const LOGS: &str = "\
enroll_id,date,time,event,course_id
a,2014-06-01,09:00:00,video,C1
a,2014-06-01,09:12:00,problem,C1
a,2014-06-01,09:20:00,video,C2
a,2014-06-01,09:45:00,page_close,C2
b,2014-06-02,14:00:00,wiki,C1
b,2014-06-02,14:03:30,discussion,C1
";

fn main() -> balsched::Result<()> {
    let bus = ingest_bus_driver(BUS.as_bytes(), "bus")?;
    println!(
        "bus lines ({} rows, {} rejected):",
        bus.report.rows_read, bus.report.rows_rejected
    );
    for job in bus.pool.jobs() {
        println!("  line {:>3}: {} min", job.id, job.cost);
    }
    for w in &bus.report.warnings {
        println!("  warning: {w}");
    }

    let logs = ingest_kdd_logs(LOGS.as_bytes(), "logs", &KddOptions::default())?;
    println!("\ncourse activities:");
    for job in logs.pool.jobs() {
        println!("  {:<16} {} min", job.id, job.cost);
    }

    let horizon = TimeHorizon::with_schedule_count(2)?;
    let set = run_ppsjbp(&logs.pool, &horizon, &PpsjbpConfig::new(500, 1))?;
    println!("\ntwo schedules: totals {:?}", set.totals());
    Ok(())
}
