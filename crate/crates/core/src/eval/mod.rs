//! Detection scoring, coverage records and run aggregation.

mod aggregate;
mod clusters;
pub mod csv_io;
mod score;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, aggregate_grouped, CurvePoint, Curves};
pub use clusters::{extract_clusters, PredictedCluster};
pub use score::{score, score_points, MatchResult};

use crate::planner::PlannerMode;

/// Parameters for turning a map into scored detections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Matching radius, metres.
    pub radius: f64,
    pub min_cluster_size: usize,
    /// Voxels below this confidence do not form clusters.
    pub confidence_threshold: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            radius: 0.10,
            min_cluster_size: 1,
            confidence_threshold: 0.3,
        }
    }
}

/// Metrics after one executed viewpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub viewpoint_index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub coverage: f64,
    /// Simulated seconds since the episode started.
    pub elapsed: f64,
    pub planner_mode: PlannerMode,
}
