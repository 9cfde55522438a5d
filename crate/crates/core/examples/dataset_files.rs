// Round-trips the synthetic shapes through the CIFAR-10 binary layout and
// the dataset container file.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use soft_augment::data::{parse_cifar10, read_dataset, serialize_cifar10, synth_shapes, write_dataset};
use soft_augment::Result;

pub fn run() -> Result<()> {
    let ds = synth_shapes(4, 4, 11)?;
    println!(
        "{} images, shape {:?}, counts {:?}",
        ds.len(),
        ds.image_shape(),
        ds.class_counts()
    );

    // CIFAR bytes quantize pixels to 1/255.
    let bytes = serialize_cifar10(&ds)?;
    let parsed = parse_cifar10(&bytes)?;
    let max_err = ds
        .images
        .iter()
        .zip(&parsed.images)
        .flat_map(|(a, b)| a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!(
        "cifar-10 bytes: {}, max quantization error {max_err:.5}",
        bytes.len()
    );

    let path = std::env::temp_dir().join(format!("softaug-example-{}.bin", std::process::id()));
    write_dataset(&ds, BufWriter::new(File::create(&path)?))?;
    let back = read_dataset(BufReader::new(File::open(&path)?))?;
    std::fs::remove_file(&path)?;
    println!(
        "container round trip exact: {}",
        back.images == ds.images && back.labels == ds.labels
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
