// Per-pair loss weights for two-view self-supervised training, under both
// weighting hypotheses.

use soft_augment::softening::SslHypothesis;
use soft_augment::sslweights::{pair_weights, CropPair};
use soft_augment::{CropWindow, Result, SofteningMode, SofteningPolicy};

pub fn run() -> Result<()> {
    let policy = SofteningPolicy::new(2.0, 0.1, SofteningMode::Weight)?;
    let view = CropWindow::new(0, 0, 24, 24)?;
    let pairs = [
        CropPair::new(view, view, 32, 32)?,
        CropPair::new(view, CropWindow::new(4, 4, 24, 24)?, 32, 32)?,
        CropPair::new(view, CropWindow::new(-10, 8, 20, 20)?, 32, 32)?,
        CropPair::new(
            CropWindow::new(-12, -12, 16, 16)?,
            CropWindow::new(12, 12, 16, 16)?,
            32,
            32,
        )?,
    ];
    let sa1 = pair_weights(&pairs, &policy, SslHypothesis::Sa1, true)?;
    let sa2 = pair_weights(&pairs, &policy, SslHypothesis::Sa2, true)?;
    println!("{:>8} {:>8} {:>8}", "iou", "SA1", "SA2");
    for ((pair, a), b) in pairs.iter().zip(&sa1).zip(&sa2) {
        println!("{:>8.4} {a:>8.4} {b:>8.4}", pair.iou());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
