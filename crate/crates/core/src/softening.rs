//! Transform magnitude to target confidence.
//!
//! The curve is `p = 1 - (1 - p_min) * (1 - v)^k`. A fully visible sample
//! always keeps `p = 1`, including the degenerate `k = 0` curve, and a fully
//! lost one gets exactly `p_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Visibility;

/// How a confidence is applied to a training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SofteningMode {
    None,
    Target,
    Weight,
    TargetAndWeight,
}

impl SofteningMode {
    pub fn softens_target(self) -> bool {
        matches!(self, SofteningMode::Target | SofteningMode::TargetAndWeight)
    }

    pub fn softens_weight(self) -> bool {
        matches!(self, SofteningMode::Weight | SofteningMode::TargetAndWeight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SofteningPolicy {
    /// Curve shape.
    pub k: f64,
    /// Chance probability.
    pub p_min: f64,
    pub mode: SofteningMode,
}

impl SofteningPolicy {
    pub fn new(k: f64, p_min: f64, mode: SofteningMode) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::precondition(format!(
                "curve shape k must be >= 0, got {k}"
            )));
        }
        if !(0.0..1.0).contains(&p_min) {
            return Err(Error::precondition(format!(
                "p_min must be in [0, 1), got {p_min}"
            )));
        }
        Ok(Self { k, p_min, mode })
    }

    /// Policy with `p_min = 1 / num_classes`.
    pub fn for_classes(k: f64, num_classes: usize, mode: SofteningMode) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::precondition("need at least 2 classes"));
        }
        Self::new(k, 1.0 / num_classes as f64, mode)
    }
}

/// Probability mass on the true class.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Confidence(f64);

impl Confidence {
    pub const ONE: Confidence = Confidence(1.0);

    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("confidence {p} outside [0, 1]")));
        }
        Ok(Self(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Smoothing factor `1 - p`.
    pub fn alpha(self) -> f64 {
        1.0 - self.0
    }
}

fn power_curve(lost: f64, k: f64, p_min: f64) -> f64 {
    if lost <= 0.0 {
        return 1.0;
    }
    // lost^0 = 1, so k = 0 sits at p_min for any loss.
    if lost >= 1.0 || k == 0.0 {
        return p_min;
    }
    let p = 1.0 - (1.0 - p_min) * lost.powf(k);
    p.clamp(p_min, 1.0)
}

pub fn soften(v: Visibility, policy: &SofteningPolicy) -> Confidence {
    Confidence(power_curve(1.0 - v.value(), policy.k, policy.p_min))
}

/// Softening for transforms whose magnitude is not a crop. `to_visibility`
/// maps the transform magnitude to an equivalent visibility.
pub fn soften_magnitude<F>(magnitude: f64, to_visibility: F, policy: &SofteningPolicy) -> Confidence
where
    F: Fn(f64) -> Visibility,
{
    soften(to_visibility(magnitude), policy)
}

/// Constant label-smoothing confidence `1 - alpha`.
pub fn label_smoothing_confidence(alpha: f64) -> Result<Confidence> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::precondition(format!(
            "smoothing factor must be in [0, 1), got {alpha}"
        )));
    }
    Ok(Confidence(1.0 - alpha))
}

/// Pair-weighting hypothesis for self-supervised crops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SslHypothesis {
    /// Low-IoU ("hard") pairs get low weight.
    Sa1,
    /// High-IoU ("easy") pairs get low weight.
    Sa2,
}

pub fn ssl_pair_confidence(
    iou: f64,
    policy: &SofteningPolicy,
    hypothesis: SslHypothesis,
) -> Result<Confidence> {
    if !(0.0..=1.0).contains(&iou) {
        return Err(Error::precondition(format!("IoU {iou} outside [0, 1]")));
    }
    let lost = match hypothesis {
        SslHypothesis::Sa1 => 1.0 - iou,
        SslHypothesis::Sa2 => iou,
    };
    Ok(Confidence(power_curve(lost, policy.k, policy.p_min)))
}

/// Rescales positive weights so their mean is 1.
pub fn normalize_batch_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::domain("cannot normalize an empty batch"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::domain(format!(
            "batch weights must be positive and finite, got {w}"
        )));
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    Ok(weights.iter().map(|w| w / mean).collect())
}
