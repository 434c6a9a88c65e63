//! CSV exchange formats.
//!
//! Every file starts with a block of `# key: value` metadata lines followed
//! by a header row. Readers skip the metadata block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Curves, TrialRecord};
use crate::error::{Error, Result};
use crate::planner::PlannerMode;

pub type Metadata = Vec<(String, String)>;

/// One row of an episode CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub planner: PlannerMode,
    pub scene_seed: u64,
    pub run_id: u32,
    pub viewpoint_index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub coverage: f64,
    pub elapsed_s: f64,
}

impl TrialRow {
    pub fn new(scene_seed: u64, run_id: u32, r: &TrialRecord) -> Self {
        Self {
            planner: r.planner_mode,
            scene_seed,
            run_id,
            viewpoint_index: r.viewpoint_index,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            coverage: r.coverage,
            elapsed_s: r.elapsed,
        }
    }

    pub fn record(&self) -> TrialRecord {
        TrialRecord {
            viewpoint_index: self.viewpoint_index,
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
            coverage: self.coverage,
            elapsed: self.elapsed_s,
            planner_mode: self.planner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub planner: PlannerMode,
    pub viewpoint_index: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub precision_mean: f64,
    pub recall_mean: f64,
    pub runs: usize,
}

fn metadata_block(meta: &Metadata) -> String {
    meta.iter()
        .map(|(k, v)| format!("# {k}: {}\n", v.replace('\n', " ")))
        .collect()
}

/// Serialize rows under a metadata block.
pub fn to_csv_string<T: Serialize>(meta: &Metadata, rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Contract(format!("csv flush failed: {e}")))?;
    Ok(metadata_block(meta) + &String::from_utf8(body).expect("csv output is utf-8"))
}

pub fn write_csv<T: Serialize>(path: &Path, meta: &Metadata, rows: &[T]) -> Result<()> {
    crate::io_util::write_atomic(path, to_csv_string(meta, rows)?.as_bytes())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Contract(format!("csv open failed: {other:?}")),
        })?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Metadata lines of a CSV file, in order.
pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.trim_start_matches('#').trim().split_once(':')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect())
}

pub fn curve_rows(c: &Curves) -> Vec<CurveRow> {
    c.points
        .iter()
        .map(|p| CurveRow {
            planner: c.planner_mode,
            viewpoint_index: p.viewpoint_index,
            f1_mean: p.f1_mean,
            f1_std: p.f1_std,
            coverage_mean: p.coverage_mean,
            coverage_std: p.coverage_std,
            precision_mean: p.precision_mean,
            recall_mean: p.recall_mean,
            runs: c.runs,
        })
        .collect()
}
