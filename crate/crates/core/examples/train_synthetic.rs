// Trains a small MLP on the synthetic shapes with soft crop augmentation
// and reports test error and calibration.

use soft_augment::data::{normalize, synth_shapes, NormalizationStats};
use soft_augment::metrics::{ece, evaluate, top1_error};
use soft_augment::train::{train, TrainConfig};
use soft_augment::{CropSampler, Result, SofteningMode, SofteningPolicy};

pub fn run() -> Result<()> {
    let train_raw = synth_shapes(40, 4, 1)?;
    let test_raw = synth_shapes(20, 4, 2)?;
    let stats = NormalizationStats::from_dataset(&train_raw)?;
    let (train_set, test_set) = (normalize(&train_raw, &stats)?, normalize(&test_raw, &stats)?);

    let cfg = TrainConfig {
        epochs: 12,
        batch_size: 32,
        lr0: 0.02,
        momentum: 0.9,
        weight_decay: 5e-4,
        seed: 0,
        hidden_layers: vec![32],
        policy: SofteningPolicy::for_classes(2.0, 4, SofteningMode::TargetAndWeight)?,
        label_smoothing: None,
        sampler: CropSampler::Gaussian { sigma: 0.3 },
        sigma_decay: None,
        hflip: true,
    };
    let out = train(&train_set, &cfg)?;
    for e in out.log.iter().step_by(3) {
        println!(
            "epoch {:>2}  lr {:.4}  loss {:.4}  train err {:.3}",
            e.epoch, e.lr, e.loss, e.top1_error
        );
    }
    let preds = evaluate(&out.model, &test_set)?;
    println!(
        "test top-1 error {:.3}, ECE {:.4}",
        top1_error(&preds)?,
        ece(&preds, 10)?.ece
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
