// Translated crops, their visibility, IoU between crop windows, and square
// occlusion patches.

use soft_augment::geometry::{iou, occlude, pad_and_crop, visibility};
use soft_augment::{CropWindow, ImageBuffer, RandomSource, Result};

pub fn run() -> Result<()> {
    let img = ImageBuffer::new(1, 4, 4, (0..16).map(f64::from).collect())?;

    // Shift the content up one row and left two columns; vacated pixels are zero.
    let shifted = pad_and_crop(&img, &CropWindow::translation(1, 2, 4, 4))?;
    for row in 0..4 {
        let cells: Vec<String> = (0..4).map(|c| format!("{:>4}", shifted.get(0, row, c))).collect();
        println!("{}", cells.join(""));
    }

    for (tx, ty) in [(0, 0), (4, 4), (16, 0), (16, 16), (32, 0)] {
        println!(
            "visibility({tx:>2}, {ty:>2}) on 32x32 = {}",
            visibility(tx, ty, 32, 32)?.value()
        );
    }

    let a = CropWindow::new(0, 0, 2, 2)?;
    let b = CropWindow::new(1, 1, 2, 2)?;
    println!(
        "iou {:?} {:?} = {:.6}",
        (a.tx, a.ty, a.w, a.h),
        (b.tx, b.ty, b.w, b.h),
        iou(&a, &b)
    );

    let mut rng = RandomSource::new(0);
    let covered = occlude(&ImageBuffer::filled(3, 32, 32, 1.0), 0.25, &mut rng, 0.0)?;
    let zeros = (0..32)
        .flat_map(|r| (0..32).map(move |c| (r, c)))
        .filter(|&(r, c)| covered.get(0, r, c) == 0.0)
        .count();
    println!("lambda 0.25 on 32x32 covers {zeros} pixels");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
