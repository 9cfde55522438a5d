// Top-1 error of a briefly trained model as random square patches cover
// more of each test image.

use soft_augment::data::{normalize, synth_shapes, NormalizationStats};
use soft_augment::metrics::{occlusion_csv, occlusion_sweep};
use soft_augment::train::{train, TrainConfig};
use soft_augment::{CropSampler, RandomSource, Result, SofteningMode, SofteningPolicy};

pub fn run() -> Result<()> {
    let train_raw = synth_shapes(30, 4, 5)?;
    let stats = NormalizationStats::from_dataset(&train_raw)?;
    let train_set = normalize(&train_raw, &stats)?;
    let test_set = normalize(&synth_shapes(15, 4, 6)?, &stats)?;

    let cfg = TrainConfig {
        epochs: 8,
        batch_size: 32,
        lr0: 0.02,
        momentum: 0.9,
        weight_decay: 5e-4,
        seed: 1,
        hidden_layers: vec![32],
        policy: SofteningPolicy::for_classes(2.0, 4, SofteningMode::TargetAndWeight)?,
        label_smoothing: None,
        sampler: CropSampler::Gaussian { sigma: 0.3 },
        sigma_decay: None,
        hflip: true,
    };
    let model = train(&train_set, &cfg)?.model;
    // Zero is the dataset mean after normalization.
    let rows = occlusion_sweep(
        &model,
        &test_set,
        &[0.0, 0.2, 0.4, 0.6, 0.8],
        2,
        &RandomSource::new(9),
        0.0,
    )?;
    print!("{}", occlusion_csv(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
