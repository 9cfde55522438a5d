//! Mini-batch SGD training with softened crop augmentation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::data::{hflip, LabeledDataset};
use crate::error::{Error, Result};
use crate::geometry::{crop_visibility, pad_and_crop, resized_crop, visibility, CropWindow, Visibility};
use crate::image::ImageBuffer;
use crate::loss::LossMode;
use crate::model::{Gradients, MlpClassifier};
use crate::rng::RandomSource;
use crate::sampling::{CropDraw, CropSampler};
use crate::softening::{label_smoothing_confidence, soften, Confidence, SofteningPolicy};

/// Shrinks the crop spread by `factor` over the last `final_epochs` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaDecay {
    pub final_epochs: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Hidden layer widths between the flattened input and the class logits.
    pub hidden_layers: Vec<usize>,
    pub policy: SofteningPolicy,
    /// Fixed label smoothing `alpha`; replaces the visibility curve when set.
    pub label_smoothing: Option<f64>,
    pub sampler: CropSampler,
    pub sigma_decay: Option<SigmaDecay>,
    pub hflip: bool,
}

impl TrainConfig {
    pub fn validate(&self, dataset: &LabeledDataset) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.lr0 > 0.0) || !self.lr0.is_finite() {
            return Err(Error::config("lr0", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum", "must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be >= 0"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::config("hidden_layers", "widths must be positive"));
        }
        if let Some(alpha) = self.label_smoothing {
            label_smoothing_confidence(alpha).map_err(|e| Error::config("label_smoothing", e.to_string()))?;
        }
        if let Some(d) = self.sigma_decay {
            if !(d.factor > 0.0) {
                return Err(Error::config("sigma_decay.factor", "must be > 0"));
            }
        }
        if dataset.num_classes < 2 {
            return Err(Error::precondition("training needs at least 2 classes"));
        }
        let chance = 1.0 / dataset.num_classes as f64;
        if (self.policy.p_min - chance).abs() > 1e-12 {
            return Err(Error::config(
                "p_min",
                format!("must equal 1/num_classes = {chance}, got {}", self.policy.p_min),
            ));
        }
        if let Some((_, h, w)) = dataset.image_shape() {
            self.sampler
                .validate(w, h)
                .map_err(|e| Error::config("sampler", e.to_string()))?;
            let translates = matches!(
                self.sampler,
                CropSampler::Uniform { .. } | CropSampler::Gaussian { .. }
            );
            if translates && h != w {
                return Err(Error::config("sampler", "translation crops need square images"));
            }
        }
        Ok(())
    }

    pub fn layer_sizes(&self, input: usize, num_classes: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(&self.hidden_layers);
        sizes.push(num_classes);
        sizes
    }

    pub fn loss_mode(&self) -> LossMode {
        self.policy.mode.into()
    }
}

/// Cosine schedule `lr0 * (1 + cos(pi * epoch / total)) / 2`.
pub fn cosine_lr(epoch: usize, total_epochs: usize, lr0: f64) -> f64 {
    if total_epochs == 0 {
        return lr0;
    }
    let t = epoch.min(total_epochs) as f64 / total_epochs as f64;
    lr0 * 0.5 * (1.0 + (PI * t).cos())
}

/// Crop spread in effect at `epoch`, or `None` for samplers without one.
pub fn effective_sigma(epoch: usize, cfg: &TrainConfig) -> Option<f64> {
    let sigma = cfg.sampler.sigma()?;
    match cfg.sigma_decay {
        Some(d) if epoch + d.final_epochs >= cfg.epochs => Some(sigma / d.factor),
        _ => Some(sigma),
    }
}

/// An augmented image with its softened label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub image: ImageBuffer,
    pub label: usize,
    pub confidence: Confidence,
    /// Loss weight: `p` when weights are softened, otherwise 1.
    pub weight: f64,
}

/// Applies a drawn crop and returns the cropped image with its visibility.
pub fn apply_crop(image: &ImageBuffer, draw: &CropDraw) -> Result<(ImageBuffer, Visibility)> {
    let (h, w) = (image.height(), image.width());
    match draw {
        CropDraw::Translation { tx, ty } => {
            let out = pad_and_crop(image, &CropWindow::translation(*tx, *ty, w, h))?;
            Ok((out, visibility(*tx, *ty, h, w)?))
        }
        CropDraw::Resize(window) => Ok((resized_crop(image, window, h, w), crop_visibility(window, w, h))),
    }
}

/// Flip, crop, and soften one sample.
pub fn augment_sample(
    image: &ImageBuffer,
    label: usize,
    sampler: &CropSampler,
    policy: &SofteningPolicy,
    label_smoothing: Option<f64>,
    flip: bool,
    rng: &mut RandomSource,
) -> Result<TrainingSample> {
    let flipped;
    let source = if flip {
        flipped = hflip(image, rng);
        &flipped
    } else {
        image
    };
    let draw = sampler.draw(source.width(), source.height(), rng);
    let (cropped, v) = apply_crop(source, &draw)?;
    let confidence = match label_smoothing {
        Some(alpha) => label_smoothing_confidence(alpha)?,
        None => soften(v, policy),
    };
    let weight = if policy.mode.softens_weight() {
        confidence.value()
    } else {
        1.0
    };
    Ok(TrainingSample {
        image: cropped,
        label,
        confidence,
        weight,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    /// Crop spread in effect, if the sampler has one.
    pub sigma: Option<f64>,
    /// Mean per-sample training loss.
    pub loss: f64,
    /// Top-1 error on the augmented training samples.
    pub top1_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpClassifier,
    pub log: Vec<EpochLog>,
}

// Samples per gradient-accumulation chunk. Fixed so that the reduction order
// is independent of the thread pool size.
const CHUNK: usize = 8;

const INIT_TAG: u64 = 1;
const SHUFFLE_TAG: u64 = 2;
const AUGMENT_TAG: u64 = 3;

struct ChunkResult {
    loss: f64,
    wrong: usize,
}

impl Gradients {
    fn zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
    }
}

/// Trains a fresh model. Deterministic for a given config and dataset.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::domain("cannot train on an empty dataset"));
    }
    cfg.validate(dataset)?;
    let input = dataset.images[0].len();
    let root = RandomSource::new(cfg.seed);
    let mut model = MlpClassifier::new(
        &cfg.layer_sizes(input, dataset.num_classes),
        &mut root.split(INIT_TAG),
    )?;
    let mut velocity = Gradients::zeros_like(&model);
    let max_chunks = cfg.batch_size.min(dataset.len()).div_ceil(CHUNK);
    let mut chunk_grads = vec![Gradients::zeros_like(&model); max_chunks];
    let mode = cfg.loss_mode();
    let shuffle_root = root.split(SHUFFLE_TAG);
    let augment_root = root.split(AUGMENT_TAG);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(epoch, cfg.epochs, cfg.lr0);
        let sigma = effective_sigma(epoch, cfg);
        let sampler = sigma.map_or(cfg.sampler, |s| cfg.sampler.with_sigma(s));
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        shuffle_root.split(epoch as u64).shuffle(&mut order);
        let epoch_rng = augment_root.split(epoch as u64);

        let mut epoch_loss = 0.0;
        let mut epoch_wrong = 0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let used = batch.len().div_ceil(CHUNK);
            let model_ref = &model;
            let results: Vec<ChunkResult> = batch
                .par_chunks(CHUNK)
                .zip(chunk_grads[..used].par_iter_mut())
                .map(|(idxs, grads)| -> Result<ChunkResult> {
                    grads.zero();
                    let mut loss = 0.0;
                    let mut wrong = 0;
                    for &i in idxs {
                        let mut rng = epoch_rng.split(i as u64);
                        let s = augment_sample(
                            &dataset.images[i],
                            dataset.labels[i],
                            &sampler,
                            &cfg.policy,
                            cfg.label_smoothing,
                            cfg.hflip,
                            &mut rng,
                        )?;
                        let (logits, l) = model_ref.accumulate_gradients(
                            s.image.pixels(),
                            s.label,
                            s.confidence,
                            mode,
                            scale,
                            grads,
                        )?;
                        loss += l;
                        wrong += usize::from(argmax(&logits) != s.label);
                    }
                    Ok(ChunkResult { loss, wrong })
                })
                .collect::<Result<_>>()?;

            let (head, tail) = chunk_grads[..used].split_at_mut(1);
            for g in tail.iter() {
                head[0].add_assign(g);
            }
            let mut batch_loss = 0.0;
            for r in &results {
                batch_loss += r.loss;
                epoch_wrong += r.wrong;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    lr,
                });
            }
            epoch_loss += batch_loss;
            sgd_step(
                &mut model,
                &mut velocity,
                &head[0],
                lr,
                cfg.momentum,
                cfg.weight_decay,
            );
        }
        log.push(EpochLog {
            epoch,
            lr,
            sigma,
            loss: epoch_loss / dataset.len() as f64,
            top1_error: epoch_wrong as f64 / dataset.len() as f64,
        });
    }
    Ok(TrainOutcome { model, log })
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &x)| if x > best.1 { (i, x) } else { best },
        )
        .0
}

/// SGD with momentum; weight decay shrinks weights (not biases) directly.
fn sgd_step(
    model: &mut MlpClassifier,
    velocity: &mut Gradients,
    grads: &Gradients,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    let shrink = 1.0 - lr * weight_decay;
    for ((layer, v), g) in model
        .layers_mut()
        .iter_mut()
        .zip(&mut velocity.layers)
        .zip(&grads.layers)
    {
        for ((w, vw), gw) in layer.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
            *vw = momentum * *vw + gw;
            *w = *w * shrink - lr * *vw;
        }
        for ((b, vb), gb) in layer.bias.iter_mut().zip(&mut v.bias).zip(&g.bias) {
            *vb = momentum * *vb + gb;
            *b -= lr * *vb;
        }
    }
}

/// Per-epoch log as CSV: `epoch,lr,sigma,loss,top1_error`. Samplers
/// without a spread log `sigma` as 0.
pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    use crate::report::{csv_line, fmt_sig6};
    let mut out = csv_line(["epoch", "lr", "sigma", "loss", "top1_error"]);
    for e in log {
        out.push_str(&csv_line([
            e.epoch.to_string(),
            fmt_sig6(e.lr),
            fmt_sig6(e.sigma.unwrap_or(0.0)),
            fmt_sig6(e.loss),
            fmt_sig6(e.top1_error),
        ]));
    }
    out
}
