//! Crop and occlusion geometry on integer pixel grids.
//!
//! Offsets follow the reference padding crop: `tx` moves along the first
//! spatial axis (rows) and `ty` along the second (columns). A same-size crop
//! reads pixel `(c, i + tx, j + ty)` from a zero-padded canvas.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::RandomSource;

/// Crop parameters `(tx, ty, w, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropWindow {
    pub tx: i64,
    pub ty: i64,
    pub w: i64,
    pub h: i64,
}

impl CropWindow {
    pub fn new(tx: i64, ty: i64, w: i64, h: i64) -> Result<Self> {
        if w < 1 || h < 1 {
            return Err(Error::precondition(format!(
                "crop window size must be positive, got {w}x{h}"
            )));
        }
        Ok(Self { tx, ty, w, h })
    }

    /// Same-size window translated by `(tx, ty)`.
    pub fn translation(tx: i64, ty: i64, width: usize, height: usize) -> Self {
        Self {
            tx,
            ty,
            w: width as i64,
            h: height as i64,
        }
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    /// Converts a window whose `(tx, ty)` is the offset between the crop
    /// center and the image center into a window whose `(tx, ty)` is its
    /// top-left corner in image coordinates.
    pub fn centered_to_corner(&self, image_w: usize, image_h: usize) -> CropWindow {
        let left = (image_w as i64 - self.w).div_euclid(2) + self.tx;
        let top = (image_h as i64 - self.h).div_euclid(2) + self.ty;
        CropWindow {
            tx: left,
            ty: top,
            w: self.w,
            h: self.h,
        }
    }

    /// Inverse of [`CropWindow::centered_to_corner`].
    pub fn corner_to_centered(&self, image_w: usize, image_h: usize) -> CropWindow {
        let tx = self.tx - (image_w as i64 - self.w).div_euclid(2);
        let ty = self.ty - (image_h as i64 - self.h).div_euclid(2);
        CropWindow {
            tx,
            ty,
            w: self.w,
            h: self.h,
        }
    }

    /// Overlap area with another corner-frame window.
    pub fn intersection_area(&self, other: &CropWindow) -> i64 {
        let x0 = self.tx.max(other.tx);
        let y0 = self.ty.max(other.ty);
        let x1 = (self.tx + self.w).min(other.tx + other.w);
        let y1 = (self.ty + self.h).min(other.ty + other.h);
        (x1 - x0).max(0) * (y1 - y0).max(0)
    }
}

/// Fraction of the original image retained by a crop.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Visibility(f64);

impl Visibility {
    pub fn new(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::precondition(format!("visibility {v} outside [0, 1]")));
        }
        Ok(Self(v))
    }

    pub const FULL: Visibility = Visibility(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Same-size translated crop with zero padding.
///
/// The window must have the image's size; `|tx| <= height` and
/// `|ty| <= width`.
pub fn pad_and_crop(image: &ImageBuffer, window: &CropWindow) -> Result<ImageBuffer> {
    let (c, h, w) = (image.channels(), image.height(), image.width());
    if window.w != w as i64 || window.h != h as i64 {
        return Err(Error::precondition(format!(
            "pad_and_crop needs a same-size window ({w}x{h}), got {}x{}",
            window.w, window.h
        )));
    }
    let (tx, ty) = (window.tx, window.ty);
    if tx.unsigned_abs() > h as u64 || ty.unsigned_abs() > w as u64 {
        return Err(Error::precondition(format!(
            "offset ({tx}, {ty}) exceeds image bounds {h}x{w}"
        )));
    }

    let mut out = ImageBuffer::zeros(c, h, w);
    // Rows/cols of the output whose source lies inside the image.
    let row_lo = (-tx).max(0) as usize;
    let row_hi = (h as i64 - tx).min(h as i64).max(0) as usize;
    let col_lo = (-ty).max(0) as usize;
    let col_hi = (w as i64 - ty).min(w as i64).max(0) as usize;
    if row_lo >= row_hi || col_lo >= col_hi {
        return Ok(out);
    }
    let src_col_lo = (col_lo as i64 + ty) as usize;
    let span = col_hi - col_lo;
    for ch in 0..c {
        for i in row_lo..row_hi {
            let src_row = (i as i64 + tx) as usize;
            let src = image.offset(ch, src_row, src_col_lo);
            let dst = out.offset(ch, i, col_lo);
            out.pixels_mut()[dst..dst + span].copy_from_slice(&image.pixels()[src..src + span]);
        }
    }
    Ok(out)
}

/// Visibility of a same-size crop translated by `(tx, ty)`, where
/// `extent_tx` is the image extent along the axis `tx` moves on and
/// `extent_ty` likewise for `ty`.
pub fn visibility(tx: i64, ty: i64, extent_tx: usize, extent_ty: usize) -> Result<Visibility> {
    if extent_tx == 0 || extent_ty == 0 {
        return Err(Error::precondition("image extents must be positive"));
    }
    if tx.unsigned_abs() > extent_tx as u64 || ty.unsigned_abs() > extent_ty as u64 {
        return Err(Error::precondition(format!(
            "offset ({tx}, {ty}) exceeds extents ({extent_tx}, {extent_ty})"
        )));
    }
    let a = (extent_tx as i64 - tx.abs()) as f64;
    let b = (extent_ty as i64 - ty.abs()) as f64;
    Ok(Visibility(a * b / (extent_tx as f64 * extent_ty as f64)))
}

/// Visibility of a centered crop window of arbitrary size:
/// `|crop ∩ image| / |image|`. For a same-size window this equals
/// [`visibility`].
pub fn crop_visibility(window: &CropWindow, image_w: usize, image_h: usize) -> Visibility {
    let corner = window.centered_to_corner(image_w, image_h);
    let image = CropWindow::translation(0, 0, image_w, image_h);
    let inter = corner.intersection_area(&image) as f64;
    Visibility((inter / image.area() as f64).clamp(0.0, 1.0))
}

/// Intersection over union of two corner-frame windows.
pub fn iou(a: &CropWindow, b: &CropWindow) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Side of the square patch covering `lambda` of an `h x w` image.
pub fn occlusion_side(lambda: f64, height: usize, width: usize) -> usize {
    let side = (lambda * (height * width) as f64).sqrt().round() as usize;
    side.min(height).min(width)
}

/// Sets a randomly placed, fully in-bounds square patch covering `lambda`
/// of the image area to `fill` in every channel.
pub fn occlude(image: &ImageBuffer, lambda: f64, rng: &mut RandomSource, fill: f64) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::precondition(format!(
            "occlusion fraction {lambda} outside [0, 1]"
        )));
    }
    let (h, w) = (image.height(), image.width());
    let side = occlusion_side(lambda, h, w);
    let mut out = image.clone();
    if side == 0 {
        return Ok(out);
    }
    let top = rng.int_inclusive(0, (h - side) as i64) as usize;
    let left = rng.int_inclusive(0, (w - side) as i64) as usize;
    for c in 0..image.channels() {
        for row in top..top + side {
            let start = out.offset(c, row, left);
            out.pixels_mut()[start..start + side].fill(fill);
        }
    }
    Ok(out)
}

/// Crops a centered window and resamples it to `out_h x out_w` with
/// nearest-neighbour lookup. Source pixels outside the image read as 0.
pub fn resized_crop(image: &ImageBuffer, window: &CropWindow, out_h: usize, out_w: usize) -> ImageBuffer {
    let corner = window.centered_to_corner(image.width(), image.height());
    let mut out = ImageBuffer::zeros(image.channels(), out_h, out_w);
    let (h, w) = (image.height() as i64, image.width() as i64);
    for oi in 0..out_h {
        let src_row = corner.ty + ((2 * oi as i64 + 1) * corner.h) / (2 * out_h as i64);
        if src_row < 0 || src_row >= h {
            continue;
        }
        for oj in 0..out_w {
            let src_col = corner.tx + ((2 * oj as i64 + 1) * corner.w) / (2 * out_w as i64);
            if src_col < 0 || src_col >= w {
                continue;
            }
            for c in 0..image.channels() {
                let v = image.get(c, src_row as usize, src_col as usize);
                out.set(c, oi, oj, v);
            }
        }
    }
    out
}
