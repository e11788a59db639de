use std::collections::HashMap;
use std::io::Read;

use super::{IngestReport, Ingested};
use crate::error::{Error, Result};
use crate::model::{Job, JobPool};

const LINE_COLUMN: &str = "Bus_Line_Id";
const DURATION_COLUMN: &str = "Duration";

/// Picks whichever of comma, semicolon or tab occurs most in the header.
fn detect_delimiter(header: &str) -> u8 {
    b",;\t"
        .iter()
        .copied()
        .max_by_key(|&d| (header.bytes().filter(|&b| b == d).count(), d == b','))
        .unwrap_or(b',')
}

/// Minutes from `42`, `42.5`, `h:mm` or `h:mm:ss`.
fn parse_minutes(raw: &str) -> Option<f64> {
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        let neg = raw.starts_with('-');
        let nums: Option<Vec<f64>> = parts
            .iter()
            .map(|p| p.trim_start_matches('-').parse::<f64>().ok())
            .collect();
        let nums = nums?;
        let minutes = match nums.as_slice() {
            [h, m] => h * 60.0 + m,
            [h, m, s] => h * 60.0 + m + s / 60.0,
            _ => return None,
        };
        Some(if neg { -minutes } else { minutes })
    } else {
        raw.parse().ok().filter(|v: &f64| v.is_finite())
    }
}

/// One job per bus line, costed at the line's summed run durations in
/// whole minutes. Jobs keep first-seen line order.
pub fn ingest_bus_driver<R: Read>(mut reader: R, source_name: &str) -> Result<Ingested> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(source_name, e))?;
    let header = text.lines().next().unwrap_or("");
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(header))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn {
                source_name: source_name.to_string(),
                column: name.to_string(),
            })
    };
    let line_col = find(LINE_COLUMN)?;
    let dur_col = find(DURATION_COLUMN)?;

    let mut report = IngestReport::default();
    let mut order: Vec<String> = Vec::new();
    let mut sums: HashMap<String, f64> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        report.rows_read += 1;
        let row = record.position().map_or(0, |p| p.line());
        let Some(line_id) = record.get(line_col).filter(|s| !s.is_empty()) else {
            report.reject(format!("{source_name}:{row}: missing {LINE_COLUMN}"));
            continue;
        };
        let raw = record.get(dur_col).unwrap_or("");
        let minutes = match parse_minutes(raw) {
            Some(m) if m >= 0.0 => m,
            Some(m) => {
                report.reject(format!("{source_name}:{row}: negative duration {m}"));
                continue;
            }
            None => {
                report.reject(format!("{source_name}:{row}: unreadable duration `{raw}`"));
                continue;
            }
        };
        match sums.get_mut(line_id) {
            Some(total) => *total += minutes,
            None => {
                order.push(line_id.to_string());
                sums.insert(line_id.to_string(), minutes);
            }
        }
    }

    let jobs = order
        .into_iter()
        .map(|id| {
            let cost = (sums[&id] + 1e-9).floor();
            Job::new(id, cost)
        })
        .collect();
    let pool = JobPool::new(jobs)?;
    report.jobs = pool.len();
    Ok(Ingested { pool, report })
}
