// How visibility turns into target confidence for a few curve shapes.

use soft_augment::geometry::Visibility;
use soft_augment::softening::{label_smoothing_confidence, soften};
use soft_augment::{Result, SofteningMode, SofteningPolicy};

pub fn run() -> Result<()> {
    let ks = [0.0, 1.0, 2.0, 4.0];
    print!("{:>5}", "v");
    for k in ks {
        print!("{:>9}", format!("k={k}"));
    }
    println!();
    for step in 0..=10 {
        let v = step as f64 / 10.0;
        print!("{v:>5.1}");
        for k in ks {
            let policy = SofteningPolicy::for_classes(k, 100, SofteningMode::TargetAndWeight)?;
            print!("{:>9.4}", soften(Visibility::new(v)?, &policy).value());
        }
        println!();
    }
    // Label smoothing ignores visibility entirely.
    println!(
        "label smoothing alpha=0.1 -> p = {}",
        label_smoothing_confidence(0.1)?.value()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
