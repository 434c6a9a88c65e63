use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::error::{Error, Result};
use crate::planner::PlannerMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub viewpoint_index: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub precision_mean: f64,
    pub recall_mean: f64,
}

/// Per-viewpoint mean and population standard deviation across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub planner_mode: PlannerMode,
    pub runs: usize,
    pub points: Vec<CurvePoint>,
}

impl Curves {
    pub fn last(&self) -> &CurvePoint {
        self.points.last().expect("curves are never empty")
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn check_runs<'a>(runs: impl Iterator<Item = &'a Vec<TrialRecord>>) -> Result<(PlannerMode, usize)> {
    let mut mode = None;
    let mut len = 0;
    for r in runs {
        for rec in r {
            match mode {
                None => mode = Some(rec.planner_mode),
                Some(m) if m != rec.planner_mode => {
                    return Err(Error::Contract("runs mix planner modes".into()));
                }
                _ => {}
            }
        }
        len = len.max(r.len());
    }
    match mode {
        Some(m) => Ok((m, len)),
        None => Err(Error::Empty("no trial records to aggregate")),
    }
}

/// Record at index `i`, carrying the final record forward past the end.
fn padded(run: &[TrialRecord], i: usize) -> &TrialRecord {
    &run[i.min(run.len() - 1)]
}

fn curves_over(runs: &[&Vec<TrialRecord>], len: usize, mode: PlannerMode) -> Curves {
    let points = (0..len)
        .map(|i| {
            let col = |f: fn(&TrialRecord) -> f64| -> Vec<f64> {
                runs.iter().map(|r| f(padded(r, i))).collect()
            };
            let (f1_mean, f1_std) = mean_std(&col(|r| r.f1));
            let (coverage_mean, coverage_std) = mean_std(&col(|r| r.coverage));
            CurvePoint {
                viewpoint_index: i,
                f1_mean,
                f1_std,
                coverage_mean,
                coverage_std,
                precision_mean: mean_std(&col(|r| r.precision)).0,
                recall_mean: mean_std(&col(|r| r.recall)).0,
            }
        })
        .collect();
    Curves {
        planner_mode: mode,
        runs: runs.len(),
        points,
    }
}

/// Aggregate runs of one planner. Shorter runs are padded by repeating
/// their final record; empty runs are ignored.
pub fn aggregate(runs: &[Vec<TrialRecord>]) -> Result<Curves> {
    let (mode, len) = check_runs(runs.iter())?;
    let nonempty: Vec<&Vec<TrialRecord>> = runs.iter().filter(|r| !r.is_empty()).collect();
    Ok(curves_over(&nonempty, len, mode))
}

/// Two-level aggregation: runs are first averaged within each group (scene),
/// then the per-group means and standard deviations are averaged across
/// groups.
pub fn aggregate_grouped(groups: &[Vec<Vec<TrialRecord>>]) -> Result<Curves> {
    let (mode, len) = check_runs(groups.iter().flatten())?;
    let per_group: Vec<Curves> = groups
        .iter()
        .filter_map(|g| {
            let nonempty: Vec<&Vec<TrialRecord>> = g.iter().filter(|r| !r.is_empty()).collect();
            (!nonempty.is_empty()).then(|| curves_over(&nonempty, len, mode))
        })
        .collect();
    let n = per_group.len() as f64;
    let avg = |i: usize, f: fn(&CurvePoint) -> f64| per_group.iter().map(|c| f(&c.points[i])).sum::<f64>() / n;
    let points = (0..len)
        .map(|i| CurvePoint {
            viewpoint_index: i,
            f1_mean: avg(i, |p| p.f1_mean),
            f1_std: avg(i, |p| p.f1_std),
            coverage_mean: avg(i, |p| p.coverage_mean),
            coverage_std: avg(i, |p| p.coverage_std),
            precision_mean: avg(i, |p| p.precision_mean),
            recall_mean: avg(i, |p| p.recall_mean),
        })
        .collect();
    Ok(Curves {
        planner_mode: mode,
        runs: per_group.iter().map(|c| c.runs).sum(),
        points,
    })
}
