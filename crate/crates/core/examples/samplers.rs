// Monte-Carlo summaries of the crop samplers on a 32x32 image.

use soft_augment::experiment::cmd_sampler_stats;
use soft_augment::sampling::StandardCropConfig;
use soft_augment::{CropSampler, Result};

pub fn run() -> Result<()> {
    let samplers = [
        ("uniform r=4", CropSampler::Uniform { range: 4 }),
        ("uniform r=16", CropSampler::Uniform { range: 16 }),
        ("gaussian sigma=0.3", CropSampler::Gaussian { sigma: 0.3 }),
        (
            "resize crop sigma=0.3",
            CropSampler::ResizeCrop {
                sigma: 0.3,
                l_min: 16,
            },
        ),
        (
            "standard resize crop",
            CropSampler::StandardResizeCrop(StandardCropConfig::default()),
        ),
    ];
    for (name, sampler) in samplers {
        let csv = cmd_sampler_stats(&sampler, 32, 20_000, 7)?;
        let pick = |key: &str| {
            csv.lines()
                .find_map(|l| l.strip_prefix(key).and_then(|v| v.strip_prefix(',')))
                .unwrap_or("?")
                .to_string()
        };
        println!(
            "{name:<22} visibility mean {:<9} min {:<9} visible {}",
            pick("visibility_mean"),
            pick("visibility_min"),
            pick("fraction_visible")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
