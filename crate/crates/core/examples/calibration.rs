// Reliability table and ECE for a hand-built set of predictions.

use soft_augment::metrics::{ece, PredictionRecord};
use soft_augment::{RandomSource, Result};

pub fn run() -> Result<()> {
    // An overconfident classifier: right 70% of the time, reports ~0.9.
    let mut rng = RandomSource::new(3);
    let preds: Vec<PredictionRecord> = (0..500)
        .map(|_| {
            let c = rng.uniform_range(0.8, 1.0);
            let truth = if rng.uniform() < 0.7 { 0 } else { 1 };
            PredictionRecord::from_probs(vec![c, 1.0 - c], truth)
        })
        .collect();
    let report = ece(&preds, 10)?;
    print!("{}", report.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
