//! Top-1 error, expected calibration error and occlusion sweeps.

use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::geometry::occlude;
use crate::loss::softmax;
use crate::model::MlpClassifier;
use crate::report::{csv_line, fmt_sig6};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub probs: Vec<f64>,
    pub predicted_class: usize,
    /// Largest predicted probability.
    pub confidence: f64,
    pub true_class: usize,
}

impl PredictionRecord {
    /// First index wins ties in the argmax.
    pub fn from_probs(probs: Vec<f64>, true_class: usize) -> Self {
        let (predicted_class, confidence) =
            probs
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, p)| if p > best.1 { (i, p) } else { best },
                );
        Self {
            probs,
            predicted_class,
            confidence,
            true_class,
        }
    }

    pub fn from_logits(logits: &[f64], true_class: usize) -> Self {
        Self::from_probs(softmax(logits), true_class)
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class == self.true_class
    }
}

pub fn top1_error(preds: &[PredictionRecord]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::domain("top-1 error of an empty prediction set"));
    }
    let wrong = preds.iter().filter(|p| !p.is_correct()).count();
    Ok(wrong as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub count: usize,
    /// Fraction correct; 0 for an empty bin.
    pub accuracy: f64,
    /// Mean confidence; 0 for an empty bin.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

impl CalibrationReport {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    /// `bin,count,accuracy,confidence` rows (bins numbered from 1) followed
    /// by a trailing `ece` row.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["bin", "count", "accuracy", "confidence"]);
        for (m, b) in self.bins.iter().enumerate() {
            out.push_str(&csv_line([
                (m + 1).to_string(),
                b.count.to_string(),
                fmt_sig6(b.accuracy),
                fmt_sig6(b.confidence),
            ]));
        }
        out.push_str(&csv_line(["ece".to_string(), fmt_sig6(self.ece)]));
        out
    }
}

/// Zero-based bin for `confidence` among `num_bins` equal-width bins with
/// right-inclusive boundaries `(m-1)/M < c <= m/M`; `c = 0` goes to the
/// first bin.
pub fn calibration_bin(confidence: f64, num_bins: usize) -> usize {
    let m_f = num_bins as f64;
    let mut m = ((confidence * m_f).ceil() as usize).clamp(1, num_bins);
    // Correct for rounding in `confidence * M` so the rule holds on the
    // boundaries computed as `m / M`.
    while m > 1 && confidence <= (m - 1) as f64 / m_f {
        m -= 1;
    }
    while m < num_bins && confidence > m as f64 / m_f {
        m += 1;
    }
    m - 1
}

/// Binned expected calibration error.
pub fn ece(preds: &[PredictionRecord], num_bins: usize) -> Result<CalibrationReport> {
    if preds.is_empty() {
        return Err(Error::domain("ECE of an empty prediction set"));
    }
    if num_bins == 0 {
        return Err(Error::precondition("ECE needs at least one bin"));
    }
    let mut counts = vec![0usize; num_bins];
    let mut correct = vec![0usize; num_bins];
    let mut conf_sums = vec![0.0f64; num_bins];
    for p in preds {
        let m = calibration_bin(p.confidence, num_bins);
        counts[m] += 1;
        conf_sums[m] += p.confidence;
        if p.is_correct() {
            correct[m] += 1;
        }
    }
    let n = preds.len() as f64;
    let mut total = 0.0;
    let mut bins = Vec::with_capacity(num_bins);
    for m in 0..num_bins {
        if counts[m] == 0 {
            bins.push(CalibrationBin {
                count: 0,
                accuracy: 0.0,
                confidence: 0.0,
            });
            continue;
        }
        let count = counts[m] as f64;
        let accuracy = correct[m] as f64 / count;
        let confidence = conf_sums[m] / count;
        total += (count / n) * (accuracy - confidence).abs();
        bins.push(CalibrationBin {
            count: counts[m],
            accuracy,
            confidence,
        });
    }
    Ok(CalibrationReport { bins, ece: total })
}

/// Predictions of `model` on every image of `dataset`, in dataset order.
pub fn evaluate(model: &MlpClassifier, dataset: &LabeledDataset) -> Result<Vec<PredictionRecord>> {
    dataset
        .images
        .par_iter()
        .zip(dataset.labels.par_iter())
        .map(|(im, &label)| Ok(PredictionRecord::from_logits(&model.forward_image(im)?, label)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionRow {
    pub lambda: f64,
    pub top1_error: f64,
}

pub fn occlusion_csv(rows: &[OcclusionRow]) -> String {
    let mut out = csv_line(["lambda", "top1_error"]);
    for r in rows {
        out.push_str(&csv_line([fmt_sig6(r.lambda), fmt_sig6(r.top1_error)]));
    }
    out
}

/// Top-1 error under random square occlusion for each `lambda`.
///
/// Patch placement for image `i`, trial `t` of the `j`-th lambda comes from
/// `rng.split(j).split(i * trials + t)`, so results do not depend on thread
/// count. Patches are filled with `fill`.
pub fn occlusion_sweep(
    model: &MlpClassifier,
    dataset: &LabeledDataset,
    lambdas: &[f64],
    trials_per_image: usize,
    rng: &RandomSource,
    fill: f64,
) -> Result<Vec<OcclusionRow>> {
    if dataset.is_empty() {
        return Err(Error::domain("occlusion sweep over an empty dataset"));
    }
    if trials_per_image == 0 {
        return Err(Error::precondition("trials_per_image must be at least 1"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::precondition(format!(
            "occlusion fraction {l} outside [0, 1]"
        )));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for (j, &lambda) in lambdas.iter().enumerate() {
        let lambda_rng = rng.split(j as u64);
        let wrong: Vec<usize> = (0..dataset.len())
            .into_par_iter()
            .map(|i| -> Result<usize> {
                let mut wrong = 0;
                for t in 0..trials_per_image {
                    let mut r = lambda_rng.split((i * trials_per_image + t) as u64);
                    let img = occlude(&dataset.images[i], lambda, &mut r, fill)?;
                    let rec = PredictionRecord::from_logits(&model.forward_image(&img)?, dataset.labels[i]);
                    wrong += usize::from(!rec.is_correct());
                }
                Ok(wrong)
            })
            .collect::<Result<_>>()?;
        let total = (dataset.len() * trials_per_image) as f64;
        rows.push(OcclusionRow {
            lambda,
            top1_error: wrong.iter().sum::<usize>() as f64 / total,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(conf: f64, correct: bool) -> PredictionRecord {
        // Two-class record with the given top probability on class 0.
        PredictionRecord::from_probs(vec![conf, 1.0 - conf], if correct { 0 } else { 1 })
    }

    #[test]
    fn top1_cases() {
        let right = rec(0.9, true);
        let wrong = rec(0.9, false);
        assert_eq!(top1_error(&[right.clone(), right.clone()]).unwrap(), 0.0);
        assert_eq!(top1_error(&[wrong.clone(), wrong.clone()]).unwrap(), 1.0);
        let mixed = [right.clone(), right.clone(), right, wrong];
        assert_eq!(top1_error(&mixed).unwrap(), 0.25);
        assert!(top1_error(&[]).is_err());
    }

    #[test]
    fn bin_boundaries() {
        assert_eq!(calibration_bin(0.0, 10), 0);
        assert_eq!(calibration_bin(0.1, 10), 0);
        assert_eq!(calibration_bin(0.10000001, 10), 1);
        assert_eq!(calibration_bin(0.3, 10), 2);
        assert_eq!(calibration_bin(0.7, 10), 6);
        assert_eq!(calibration_bin(1.0, 10), 9);
        assert_eq!(calibration_bin(0.5, 1), 0);
    }

    #[test]
    fn perfect_calibration() {
        let preds: Vec<_> = (0..5)
            .map(|_| PredictionRecord::from_probs(vec![1.0, 0.0], 0))
            .collect();
        assert_eq!(ece(&preds, 10).unwrap().ece, 0.0);
    }

    #[test]
    fn hand_computed_ece() {
        let preds: Vec<_> = (0..4).map(|_| rec(0.95, true)).collect();
        let r = ece(&preds, 10).unwrap();
        assert!((r.ece - 0.05).abs() < 1e-12);
        assert_eq!(r.bins.iter().filter(|b| b.count > 0).count(), 1);

        let r = ece(&[rec(0.75, true), rec(0.75, false)], 10).unwrap();
        assert!((r.ece - 0.25).abs() < 1e-12);
        assert_eq!(r.bins.iter().map(|b| b.count).sum::<usize>(), 2);
    }

    #[test]
    fn calibration_csv_layout() {
        let r = ece(&[rec(0.75, true), rec(0.75, false)], 2).unwrap();
        assert_eq!(
            r.to_csv(),
            "bin,count,accuracy,confidence\n1,0,0,0\n2,2,0.5,0.75\nece,0.25\n"
        );
    }

    #[test]
    fn zero_model_occlusion_is_chance() {
        let ds = crate::data::synth_shapes(5, 4, 1).unwrap();
        let model = MlpClassifier::zeros(&[3072, 4]).unwrap();
        let rows = occlusion_sweep(&model, &ds, &[0.0, 0.5], 1, &RandomSource::new(0), 0.0).unwrap();
        for r in rows {
            assert!((r.top1_error - 0.75).abs() < 1e-12);
        }
        assert!(occlusion_sweep(&model, &ds, &[1.5], 1, &RandomSource::new(0), 0.0).is_err());
    }

    #[test]
    fn occlusion_csv_layout() {
        let rows = [OcclusionRow {
            lambda: 0.2,
            top1_error: 0.125,
        }];
        assert_eq!(occlusion_csv(&rows), "lambda,top1_error\n0.2,0.125\n");
    }
}
