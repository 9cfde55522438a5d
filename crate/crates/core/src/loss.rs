//! Weighted KL losses with softened one-hot targets.
//!
//! Every mode is `w * KL(target || softmax(logits))`:
//!
//! | mode                | target      | weight |
//! |---------------------|-------------|--------|
//! | `Hard`              | one-hot     | 1      |
//! | `Target`            | soft target | 1      |
//! | `Weight`            | one-hot     | p      |
//! | `TargetAndWeight`   | soft target | p      |
//!
//! The target-entropy term is kept, so target-mode loss values differ from
//! plain cross entropy while gradients do not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::softening::{Confidence, SofteningMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Hard,
    Target,
    Weight,
    TargetAndWeight,
}

impl LossMode {
    pub const ALL: [LossMode; 4] = [
        LossMode::Hard,
        LossMode::Target,
        LossMode::Weight,
        LossMode::TargetAndWeight,
    ];
}

impl From<SofteningMode> for LossMode {
    fn from(mode: SofteningMode) -> Self {
        match mode {
            SofteningMode::None => LossMode::Hard,
            SofteningMode::Target => LossMode::Target,
            SofteningMode::Weight => LossMode::Weight,
            SofteningMode::TargetAndWeight => LossMode::TargetAndWeight,
        }
    }
}

/// Soft one-hot vector: `p` on the true class, `(1 - p) / (N - 1)` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftTarget {
    probs: Vec<f64>,
    true_class: usize,
}

impl SoftTarget {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn true_class(&self) -> usize {
        self.true_class
    }
}

// Slack for `p = 1/N` computed in floating point.
const CHANCE_SLACK: f64 = 1e-12;

pub fn make_soft_target(true_class: usize, p: Confidence, num_classes: usize) -> Result<SoftTarget> {
    if num_classes < 2 {
        return Err(Error::precondition(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if true_class >= num_classes {
        return Err(Error::precondition(format!(
            "class {true_class} out of range for {num_classes} classes"
        )));
    }
    let p = p.value();
    let chance = 1.0 / num_classes as f64;
    if p < chance - CHANCE_SLACK {
        return Err(Error::domain(format!(
            "confidence {p} is below chance level {chance}"
        )));
    }
    let q = (1.0 - p) / (num_classes - 1) as f64;
    let mut probs = vec![q; num_classes];
    probs[true_class] = p;
    Ok(SoftTarget { probs, true_class })
}

fn one_hot(true_class: usize, num_classes: usize) -> Vec<f64> {
    let mut probs = vec![0.0; num_classes];
    probs[true_class] = 1.0;
    probs
}

/// Log-probabilities via log-sum-exp with max subtraction.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|&z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_logits(logits: &[f64], true_class: usize) -> Result<()> {
    if logits.len() < 2 {
        return Err(Error::precondition("need at least 2 logits"));
    }
    if true_class >= logits.len() {
        return Err(Error::precondition(format!(
            "class {true_class} out of range for {} logits",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::precondition("logits must be finite"));
    }
    Ok(())
}

/// Target distribution and sample weight for a mode.
pub fn target_and_weight(
    true_class: usize,
    p: Confidence,
    num_classes: usize,
    mode: LossMode,
) -> Result<(Vec<f64>, f64)> {
    Ok(match mode {
        LossMode::Hard => (one_hot(true_class, num_classes), 1.0),
        LossMode::Target => (make_soft_target(true_class, p, num_classes)?.probs, 1.0),
        LossMode::Weight => (one_hot(true_class, num_classes), p.value()),
        LossMode::TargetAndWeight => (make_soft_target(true_class, p, num_classes)?.probs, p.value()),
    })
}

pub fn soft_loss(logits: &[f64], true_class: usize, p: Confidence, mode: LossMode) -> Result<f64> {
    check_logits(logits, true_class)?;
    let (target, weight) = target_and_weight(true_class, p, logits.len(), mode)?;
    let log_probs = log_softmax(logits);
    let kl: f64 = target
        .iter()
        .zip(&log_probs)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, lp)| t * (t.ln() - lp))
        .sum();
    Ok(weight * kl)
}

/// Gradient of [`soft_loss`] with respect to the logits:
/// `w * (softmax(logits) - target)`.
pub fn soft_loss_grad(logits: &[f64], true_class: usize, p: Confidence, mode: LossMode) -> Result<Vec<f64>> {
    check_logits(logits, true_class)?;
    let (target, weight) = target_and_weight(true_class, p, logits.len(), mode)?;
    Ok(softmax(logits)
        .into_iter()
        .zip(target)
        .map(|(y, t)| weight * (y - t))
        .collect())
}

/// One entry of a loss batch.
#[derive(Debug, Clone, Copy)]
pub struct LossSample<'a> {
    pub logits: &'a [f64],
    pub true_class: usize,
    pub confidence: Confidence,
}

/// Unweighted mean of per-sample losses, summed in input order.
pub fn batch_loss(samples: &[LossSample<'_>], mode: LossMode) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("batch_loss of an empty batch"));
    }
    let mut total = 0.0;
    for s in samples {
        total += soft_loss(s.logits, s.true_class, s.confidence, mode)?;
    }
    Ok(total / samples.len() as f64)
}
