//! Job pool sources: a seeded synthetic generator and two ingestion paths
//! for real scheduling data.

mod bus;
mod kdd;
mod synthetic;

pub use bus::ingest_bus_driver;
pub use kdd::{ingest_kdd_logs, CourseEvent, CourseLogEntry, KddOptions, StreamMode};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use serde::Serialize;

use crate::model::JobPool;

/// Rejected rows are reported individually up to this many.
const MAX_WARNINGS: usize = 25;

/// Pool produced by an ingestion run plus row-level diagnostics.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub pool: JobPool,
    pub report: IngestReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_rejected: u64,
    pub jobs: usize,
    /// Enrollments kept after the top-student filter (log ingestion only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub students_selected: Option<usize>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    fn reject(&mut self, warning: String) {
        self.rows_rejected += 1;
        if self.warnings.len() < MAX_WARNINGS {
            self.warnings.push(warning);
        }
    }
}
