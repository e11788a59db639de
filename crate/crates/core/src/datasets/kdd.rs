//! Course activity logs to jobs.
//!
//! Each `(course, event)` pair becomes one job. Its cost is the time spent
//! in that activity, measured as the gap between an entry and the next
//! entry of the same stream, summed over all selected students and floored
//! to whole minutes. The final entry of a stream has no successor and
//! contributes nothing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{IngestReport, Ingested};
use crate::error::{Error, Result};
use crate::model::{Job, JobPool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CourseEvent {
    Access,
    Video,
    Discussion,
    Navigate,
    Problem,
    Wikipedia,
    PageClose,
}

impl CourseEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            CourseEvent::Access => "access",
            CourseEvent::Video => "video",
            CourseEvent::Discussion => "discussion",
            CourseEvent::Navigate => "navigate",
            CourseEvent::Problem => "problem",
            CourseEvent::Wikipedia => "wikipedia",
            CourseEvent::PageClose => "page_close",
        }
    }
}

impl fmt::Display for CourseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CourseEvent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "access" => CourseEvent::Access,
            "video" => CourseEvent::Video,
            "discussion" => CourseEvent::Discussion,
            "navigate" => CourseEvent::Navigate,
            "problem" => CourseEvent::Problem,
            "wiki" | "wikipedia" => CourseEvent::Wikipedia,
            "page_close" => CourseEvent::PageClose,
            other => return Err(format!("unknown event `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CourseLogEntry {
    pub enroll_id: String,
    pub timestamp: NaiveDateTime,
    pub event: CourseEvent,
    pub course_id: String,
}

/// Which entries form one stream for successor differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamMode {
    /// All of a student's entries, across courses, in time order.
    #[default]
    PerStudent,
    /// A student's entries within one course.
    PerStudentCourse,
}

impl FromStr for StreamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-student" => Ok(StreamMode::PerStudent),
            "per-student-course" => Ok(StreamMode::PerStudentCourse),
            other => Err(Error::Config(format!(
                "unknown stream mode `{other}` (expected per-student|per-student-course)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KddOptions {
    pub top_students: usize,
    pub stream: StreamMode,
}

impl Default for KddOptions {
    fn default() -> Self {
        KddOptions {
            top_students: 30,
            stream: StreamMode::PerStudent,
        }
    }
}

fn parse_entries<R: Read>(reader: R, source_name: &str, report: &mut IngestReport) -> Result<Vec<CourseLogEntry>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
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
    let cols = [
        find("enroll_id")?,
        find("date")?,
        find("time")?,
        find("event")?,
        find("course_id")?,
    ];

    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record?;
        report.rows_read += 1;
        let row = record.position().map_or(0, |p| p.line());
        let [enroll, date, time, event, course] = cols.map(|c| record.get(c).unwrap_or(""));
        if enroll.is_empty() || course.is_empty() {
            report.reject(format!("{source_name}:{row}: missing enroll_id or course_id"));
            continue;
        }
        let timestamp = match NaiveDateTime::parse_from_str(&format!("{date} {time}"), "%Y-%m-%d %H:%M:%S") {
            Ok(t) => t,
            Err(_) => {
                report.reject(format!("{source_name}:{row}: bad timestamp `{date} {time}`"));
                continue;
            }
        };
        let event = match event.parse::<CourseEvent>() {
            Ok(e) => e,
            Err(msg) => {
                report.reject(format!("{source_name}:{row}: {msg}"));
                continue;
            }
        };
        entries.push(CourseLogEntry {
            enroll_id: enroll.to_string(),
            timestamp,
            event,
            course_id: course.to_string(),
        });
    }
    Ok(entries)
}

/// Students with the most distinct courses; everyone tied with the last
/// admitted student is kept too.
fn top_students(entries: &[CourseLogEntry], wanted: usize) -> HashSet<&str> {
    let mut courses: HashMap<&str, HashSet<&str>> = HashMap::new();
    for e in entries {
        courses.entry(&e.enroll_id).or_default().insert(&e.course_id);
    }
    let mut ranked: Vec<(&str, usize)> = courses.into_iter().map(|(s, c)| (s, c.len())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if wanted == 0 || ranked.is_empty() {
        return HashSet::new();
    }
    let cutoff = ranked[wanted.min(ranked.len()) - 1].1;
    ranked
        .into_iter()
        .take_while(|&(_, n)| n >= cutoff)
        .map(|(s, _)| s)
        .collect()
}

/// Job id for a `(course, event)` pair.
pub fn job_id(course_id: &str, event: CourseEvent) -> String {
    format!("{course_id}:{event}")
}

pub fn ingest_kdd_logs<R: Read>(reader: R, source_name: &str, options: &KddOptions) -> Result<Ingested> {
    if options.top_students == 0 {
        return Err(Error::Config("top_students must be at least 1".into()));
    }
    let mut report = IngestReport::default();
    let entries = parse_entries(reader, source_name, &mut report)?;
    let selected = top_students(&entries, options.top_students);
    report.students_selected = Some(selected.len());

    // Stable grouping keeps file order for equal timestamps.
    let mut streams: BTreeMap<(&str, &str), Vec<&CourseLogEntry>> = BTreeMap::new();
    for e in entries.iter().filter(|e| selected.contains(e.enroll_id.as_str())) {
        let key = match options.stream {
            StreamMode::PerStudent => (e.enroll_id.as_str(), ""),
            StreamMode::PerStudentCourse => (e.enroll_id.as_str(), e.course_id.as_str()),
        };
        streams.entry(key).or_default().push(e);
    }

    let mut seconds: BTreeMap<(&str, CourseEvent), i64> = BTreeMap::new();
    for stream in streams.values_mut() {
        stream.sort_by_key(|e| e.timestamp);
        for (i, e) in stream.iter().enumerate() {
            let gap = stream
                .get(i + 1)
                .map_or(0, |next| (next.timestamp - e.timestamp).num_seconds());
            *seconds.entry((e.course_id.as_str(), e.event)).or_insert(0) += gap;
        }
    }

    let jobs = seconds
        .into_iter()
        .map(|((course, event), secs)| Job::new(job_id(course, event), (secs / 60) as f64))
        .collect();
    let pool = JobPool::new(jobs)?;
    report.jobs = pool.len();
    Ok(Ingested { pool, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "enroll_id,date,time,event,course_id\n";

    fn ingest(body: &str, options: KddOptions) -> Ingested {
        ingest_kdd_logs(format!("{HEADER}{body}").as_bytes(), "mem", &options).unwrap()
    }

    fn cost(pool: &JobPool, id: &str) -> f64 {
        pool.get(id).unwrap_or_else(|| panic!("no job {id}")).cost
    }

    #[test]
    fn single_entry_costs_zero() {
        let got = ingest("1,2014-01-01,08:00:00,video,C1\n", KddOptions::default());
        assert_eq!(got.pool.len(), 1);
        assert_eq!(cost(&got.pool, "C1:video"), 0.0);
    }

    #[test]
    fn sixty_seconds_is_one_minute() {
        let got = ingest(
            "1,2014-01-01,08:00:00,video,C1\n1,2014-01-01,08:01:00,video,C1\n",
            KddOptions::default(),
        );
        assert_eq!(cost(&got.pool, "C1:video"), 1.0);
    }

    #[test]
    fn unsorted_input_and_floor() {
        let got = ingest(
            "1,2014-01-01,08:02:59,access,C1\n1,2014-01-01,08:00:00,video,C1\n",
            KddOptions::default(),
        );
        // 179 s -> 2 whole minutes
        assert_eq!(cost(&got.pool, "C1:video"), 2.0);
        assert_eq!(cost(&got.pool, "C1:access"), 0.0);
    }

    #[test]
    fn stream_modes_differ_across_courses() {
        let body = "1,2014-01-01,08:00:00,video,A\n1,2014-01-01,08:10:00,video,B\n1,2014-01-01,08:30:00,video,A\n";
        let per_student = ingest(body, KddOptions::default());
        assert_eq!(cost(&per_student.pool, "A:video"), 10.0);
        assert_eq!(cost(&per_student.pool, "B:video"), 20.0);
        let per_course = ingest(
            body,
            KddOptions {
                stream: StreamMode::PerStudentCourse,
                ..Default::default()
            },
        );
        assert_eq!(cost(&per_course.pool, "A:video"), 30.0);
        assert_eq!(cost(&per_course.pool, "B:video"), 0.0);
    }

    #[test]
    fn top_student_filter_keeps_ties() {
        let body = "\
s1,2014-01-01,08:00:00,video,A
s1,2014-01-01,08:05:00,video,B
s2,2014-01-01,08:00:00,access,A
s2,2014-01-01,08:07:00,access,C
s3,2014-01-01,08:00:00,problem,Z
s3,2014-01-01,09:00:00,problem,Z
";
        let one = ingest(
            body,
            KddOptions {
                top_students: 1,
                ..Default::default()
            },
        );
        assert_eq!(one.report.students_selected, Some(2));
        assert!(one.pool.get("Z:problem").is_none());
        assert_eq!(cost(&one.pool, "A:video"), 5.0);
        assert_eq!(cost(&one.pool, "A:access"), 7.0);

        let all = ingest(
            body,
            KddOptions {
                top_students: 3,
                ..Default::default()
            },
        );
        assert_eq!(all.report.students_selected, Some(3));
        assert_eq!(cost(&all.pool, "Z:problem"), 60.0);
    }

    #[test]
    fn rejects_bad_rows() {
        let got = ingest(
            "1,2014-13-01,08:00:00,video,C1\n1,2014-01-01,08:00:00,dance,C1\n1,2014-01-01,08:00:00,page_close,C1\n",
            KddOptions::default(),
        );
        assert_eq!(got.report.rows_read, 3);
        assert_eq!(got.report.rows_rejected, 2);
        assert_eq!(got.pool.len(), 1);
        assert!(got.pool.get("C1:page_close").is_some());

        let err = ingest_kdd_logs(
            "enroll_id,date,event,course_id\n".as_bytes(),
            "mem",
            &KddOptions::default(),
        );
        assert!(matches!(err, Err(Error::MissingColumn { .. })));
    }
}
