//! Confidence-aware semantic label fusion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semantic class identifier. Class 0 is reserved for background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u16);

impl ClassId {
    pub const BACKGROUND: ClassId = ClassId(0);
    pub const SHEPHERDS_CROOK: ClassId = ClassId(1);
    pub const CANKER: ClassId = ClassId(2);

    pub fn is_background(self) -> bool {
        self == Self::BACKGROUND
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A class label together with its confidence in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticLabel {
    pub class: ClassId,
    pub confidence: f64,
}

impl SemanticLabel {
    pub fn new(class: ClassId, confidence: f64) -> Self {
        Self { class, confidence }
    }
}

/// Occupancy increments and semantic fusion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams {
    /// Confidence boost applied when an observation agrees with the stored label.
    pub gamma: f64,
    /// Multiplicative penalty applied on any label disagreement.
    pub lambda: f64,
    pub background_confidence: f64,
    pub hit_log_odds: f64,
    pub miss_log_odds: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    /// Log-odds at or above which a voxel counts as occupied.
    pub occupancy_threshold: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            lambda: 0.1,
            background_confidence: 0.3,
            hit_log_odds: 0.85,
            miss_log_odds: -0.4,
            clamp_min: -2.0,
            clamp_max: 3.5,
            occupancy_threshold: 0.0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be a finite value >= 0");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.background_confidence) {
            return bad("background_confidence must lie in [0, 1]");
        }
        if !(self.hit_log_odds > 0.0 && self.miss_log_odds < 0.0) {
            return bad("hit_log_odds must be > 0 and miss_log_odds < 0");
        }
        if !(self.clamp_min < self.clamp_max) {
            return bad("clamp_min must be below clamp_max");
        }
        if !(self.clamp_min..=self.clamp_max).contains(&self.occupancy_threshold) {
            return bad("occupancy_threshold must lie inside the clamp range");
        }
        Ok(())
    }
}

fn check_confidence(conf: f64) -> Result<()> {
    if (0.0..=1.0).contains(&conf) {
        Ok(())
    } else {
        Err(Error::Contract(format!("confidence {conf} outside [0, 1]")))
    }
}

/// Fuse an incoming `(class, confidence)` observation into a stored label.
///
/// Agreement averages the two confidences and adds `gamma`. Disagreement
/// keeps whichever label is more confident (the incoming one only if
/// strictly greater) and then scales the kept confidence by `1 - lambda`.
/// Results are clipped to `[0, 1]`.
pub fn fuse_label(
    stored: Option<SemanticLabel>,
    incoming: SemanticLabel,
    params: &FusionParams,
) -> Result<SemanticLabel> {
    check_confidence(incoming.confidence)?;
    let Some(stored) = stored else {
        return Ok(incoming);
    };
    check_confidence(stored.confidence)?;
    if stored.class == incoming.class {
        let s = (stored.confidence + incoming.confidence) / 2.0 + params.gamma;
        return Ok(SemanticLabel::new(stored.class, s.clamp(0.0, 1.0)));
    }
    let kept = if incoming.confidence > stored.confidence {
        incoming
    } else {
        stored
    };
    let s = kept.confidence * (1.0 - params.lambda);
    Ok(SemanticLabel::new(kept.class, s.clamp(0.0, 1.0)))
}
