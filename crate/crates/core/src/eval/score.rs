use serde::Serialize;

use super::PredictedCluster;
use crate::geometry::Point3;
use crate::map::ClassId;
use crate::scene::SymptomInstance;

/// Many-to-many radius matching result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    /// Clusters with at least one same-class truth within the radius.
    pub tp_p: usize,
    pub fp: usize,
    /// Truth points matched by at least one cluster.
    pub tp_c: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// For each cluster, the indices of the truth points it matched.
    pub matches: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Score clusters against labelled truth points.
///
/// A cluster matches a truth point of the same class when its centroid lies
/// within `radius`. Several clusters may match one truth point; each counts
/// as a true positive. Empty denominators give zero.
pub fn score_points(
    clusters: &[PredictedCluster],
    truth: &[(ClassId, Point3)],
    radius: f64,
) -> MatchResult {
    let mut truth_hit = vec![false; truth.len()];
    let mut matches = Vec::with_capacity(clusters.len());
    for c in clusters {
        let m: Vec<usize> = truth
            .iter()
            .enumerate()
            .filter(|(_, (class, p))| *class == c.class_id && (p - c.centroid).norm() <= radius)
            .map(|(i, _)| i)
            .collect();
        for &i in &m {
            truth_hit[i] = true;
        }
        matches.push(m);
    }
    let tp_p = matches.iter().filter(|m| !m.is_empty()).count();
    let fp = clusters.len() - tp_p;
    let tp_c = truth_hit.iter().filter(|h| **h).count();
    let fn_ = truth.len() - tp_c;
    let precision = ratio(tp_p, tp_p + fp);
    let recall = ratio(tp_c, tp_c + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MatchResult {
        tp_p,
        fp,
        tp_c,
        fn_,
        precision,
        recall,
        f1,
        matches,
    }
}

pub fn score(clusters: &[PredictedCluster], truth: &[SymptomInstance], radius: f64) -> MatchResult {
    let pts: Vec<(ClassId, Point3)> = truth.iter().map(|s| (s.class_id, s.centroid)).collect();
    score_points(clusters, &pts, radius)
}
