//! Dataset ingestion, generation and pixel-level transforms.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::RandomSource;

pub const CIFAR_CHANNELS: usize = 3;
pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PIXELS: usize = CIFAR_CHANNELS * CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR10_RECORD: usize = 1 + CIFAR_PIXELS;
pub const CIFAR100_RECORD: usize = 2 + CIFAR_PIXELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Vec<ImageBuffer>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(
        images: Vec<ImageBuffer>,
        labels: Vec<usize>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::precondition(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::precondition(format!(
                "label {l} out of range for {num_classes} classes"
            )));
        }
        if let Some(first) = images.first() {
            if images.iter().any(|im| !im.same_shape(first)) {
                return Err(Error::precondition("all images must share one shape"));
            }
        }
        Ok(Self {
            images,
            labels,
            num_classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// `(channels, height, width)` of the images, if any.
    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.images
            .first()
            .map(|im| (im.channels(), im.height(), im.width()))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

fn cifar_image(bytes: &[u8]) -> ImageBuffer {
    let pixels = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
    ImageBuffer::new(CIFAR_CHANNELS, CIFAR_SIDE, CIFAR_SIDE, pixels)
        .expect("CIFAR record has a fixed pixel count")
}

fn parse_records(
    bytes: &[u8],
    record_len: usize,
    label_byte: usize,
    num_classes: usize,
) -> Result<LabeledDataset> {
    let full = bytes.len() / record_len * record_len;
    if full != bytes.len() {
        return Err(Error::Parse {
            offset: full,
            message: format!(
                "truncated record: {} trailing bytes, records are {record_len} bytes",
                bytes.len() - full
            ),
        });
    }
    let mut images = Vec::with_capacity(bytes.len() / record_len);
    let mut labels = Vec::with_capacity(bytes.len() / record_len);
    for (index, record) in bytes.chunks_exact(record_len).enumerate() {
        let label = usize::from(record[label_byte]);
        if label >= num_classes {
            return Err(Error::Parse {
                offset: index * record_len + label_byte,
                message: format!("record {index}: label {label} >= {num_classes}"),
            });
        }
        labels.push(label);
        images.push(cifar_image(&record[record_len - CIFAR_PIXELS..]));
    }
    LabeledDataset::new(images, labels, num_classes, Split::Train)
}

/// Parses the CIFAR-10 binary layout: 1 label byte + 3072 pixel bytes per
/// record, planes R, G, B, each row-major. Pixels are scaled to `[0, 1]`.
pub fn parse_cifar10(bytes: &[u8]) -> Result<LabeledDataset> {
    parse_records(bytes, CIFAR10_RECORD, 0, 10)
}

/// Parses the CIFAR-100 binary layout (coarse byte, fine byte, pixels),
/// keeping the fine label.
pub fn parse_cifar100(bytes: &[u8]) -> Result<LabeledDataset> {
    parse_records(bytes, CIFAR100_RECORD, 1, 100)
}

fn pixel_byte(x: f64) -> u8 {
    (x * 255.0).round().clamp(0.0, 255.0) as u8
}

fn check_cifar_shape(dataset: &LabeledDataset) -> Result<()> {
    match dataset.image_shape() {
        None | Some((CIFAR_CHANNELS, CIFAR_SIDE, CIFAR_SIDE)) => Ok(()),
        Some(s) => Err(Error::precondition(format!(
            "CIFAR records need 3x32x32 images, got {s:?}"
        ))),
    }
}

/// Inverse of [`parse_cifar10`] for datasets whose pixels are multiples of 1/255.
pub fn serialize_cifar10(dataset: &LabeledDataset) -> Result<Vec<u8>> {
    check_cifar_shape(dataset)?;
    if dataset.num_classes > 10 {
        return Err(Error::precondition("CIFAR-10 supports at most 10 classes"));
    }
    let mut out = Vec::with_capacity(dataset.len() * CIFAR10_RECORD);
    for (im, &l) in dataset.images.iter().zip(&dataset.labels) {
        out.push(l as u8);
        out.extend(im.pixels().iter().map(|&p| pixel_byte(p)));
    }
    Ok(out)
}

/// Inverse of [`parse_cifar100`]; coarse labels are written as `fine / 5`.
pub fn serialize_cifar100(dataset: &LabeledDataset) -> Result<Vec<u8>> {
    check_cifar_shape(dataset)?;
    if dataset.num_classes > 100 {
        return Err(Error::precondition("CIFAR-100 supports at most 100 classes"));
    }
    let mut out = Vec::with_capacity(dataset.len() * CIFAR100_RECORD);
    for (im, &l) in dataset.images.iter().zip(&dataset.labels) {
        out.push((l / 5) as u8);
        out.push(l as u8);
        out.extend(im.pixels().iter().map(|&p| pixel_byte(p)));
    }
    Ok(out)
}

// Fill colors for the synthetic classes.
const PALETTE: [[f64; 3]; 8] = [
    [0.85, 0.30, 0.25],
    [0.30, 0.45, 0.85],
    [0.80, 0.50, 0.30],
    [0.35, 0.35, 0.80],
    [0.30, 0.75, 0.35],
    [0.80, 0.75, 0.30],
    [0.65, 0.35, 0.75],
    [0.30, 0.75, 0.75],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Square,
    Disk,
    Triangle,
    Cross,
}

impl Shape {
    fn for_class(class: usize) -> Shape {
        match class % 4 {
            0 => Shape::Square,
            1 => Shape::Disk,
            2 => Shape::Triangle,
            _ => Shape::Cross,
        }
    }

    /// Whether pixel offset `(dy, dx)` from the shape center is inside a
    /// shape of half-size `r`.
    fn contains(self, dy: f64, dx: f64, r: f64) -> bool {
        match self {
            Shape::Square => dy.abs() <= r * 0.85 && dx.abs() <= r * 0.85,
            Shape::Disk => dy * dy + dx * dx <= r * r,
            Shape::Triangle => dy <= r * 0.8 && dy >= -r && dx.abs() <= (dy + r) * 0.6,
            Shape::Cross => (dy.abs() <= r * 0.3 && dx.abs() <= r) || (dx.abs() <= r * 0.3 && dy.abs() <= r),
        }
    }
}

const SYNTH_NOISE: f64 = 0.12;
const SYNTH_JITTER: f64 = 7.0;

fn render_shape(class: usize, rng: &mut RandomSource) -> ImageBuffer {
    let side = CIFAR_SIDE;
    let center = (side as f64 - 1.0) / 2.0;
    let cy = center + rng.uniform_range(-SYNTH_JITTER, SYNTH_JITTER);
    let cx = center + rng.uniform_range(-SYNTH_JITTER, SYNTH_JITTER);
    let r = rng.uniform_range(4.5, 8.5);
    let background = rng.uniform_range(0.45, 0.55);
    let mut color = PALETTE[class];
    for c in &mut color {
        *c = (*c + rng.uniform_range(-0.1, 0.1)).clamp(0.0, 1.0);
    }
    let shape = Shape::for_class(class);

    let mut img = ImageBuffer::zeros(CIFAR_CHANNELS, side, side);
    for row in 0..side {
        for col in 0..side {
            let inside = shape.contains(row as f64 - cy, col as f64 - cx, r);
            for (ch, fill) in color.iter().enumerate() {
                let base = if inside { *fill } else { background };
                let v = base + rng.normal(SYNTH_NOISE);
                img.set(ch, row, col, v.clamp(0.0, 1.0));
            }
        }
    }
    img
}

/// Deterministic, class-balanced 3x32x32 dataset of noisy filled shapes.
/// Class `c` pairs shape `c mod 4` with palette color `c`.
pub fn synth_shapes(num_per_class: usize, num_classes: usize, seed: u64) -> Result<LabeledDataset> {
    if !(2..=8).contains(&num_classes) {
        return Err(Error::precondition(format!(
            "synth_shapes supports 2..=8 classes, got {num_classes}"
        )));
    }
    if num_per_class == 0 {
        return Err(Error::precondition("num_per_class must be at least 1"));
    }
    let root = RandomSource::new(seed);
    let mut images = Vec::with_capacity(num_per_class * num_classes);
    let mut labels = Vec::with_capacity(num_per_class * num_classes);
    for i in 0..num_per_class {
        for class in 0..num_classes {
            let mut rng = root.split((i * num_classes + class) as u64);
            images.push(render_shape(class, &mut rng));
            labels.push(class);
        }
    }
    LabeledDataset::new(images, labels, num_classes, Split::Train)
}

/// Reverses the width axis of every channel.
pub fn flip_horizontal(image: &ImageBuffer) -> ImageBuffer {
    let mut out = image.clone();
    let w = image.width();
    for c in 0..image.channels() {
        for row in 0..image.height() {
            let start = out.offset(c, row, 0);
            out.pixels_mut()[start..start + w].reverse();
        }
    }
    out
}

/// Horizontal flip with probability 0.5.
pub fn hflip(image: &ImageBuffer, rng: &mut RandomSource) -> ImageBuffer {
    if rng.coin() {
        flip_horizontal(image)
    } else {
        image.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(Error::precondition("mean and std need one entry per channel"));
        }
        if std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::precondition("per-channel std must be > 0"));
        }
        Ok(Self { mean, std })
    }

    /// Per-channel population mean and standard deviation.
    pub fn from_dataset(dataset: &LabeledDataset) -> Result<Self> {
        let (channels, h, w) = dataset
            .image_shape()
            .ok_or_else(|| Error::domain("cannot compute statistics of an empty dataset"))?;
        let plane = h * w;
        let n = (plane * dataset.len()) as f64;
        let mut mean = vec![0.0; channels];
        for im in &dataset.images {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += im.pixels()[c * plane..(c + 1) * plane].iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; channels];
        for im in &dataset.images {
            for (c, v) in var.iter_mut().enumerate() {
                *v += im.pixels()[c * plane..(c + 1) * plane]
                    .iter()
                    .map(|p| (p - mean[c]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt().max(1e-12)).collect();
        Self::new(mean, std)
    }

    fn check(&self, image: &ImageBuffer) -> Result<()> {
        if image.channels() != self.mean.len() {
            return Err(Error::precondition(format!(
                "stats have {} channels, image has {}",
                self.mean.len(),
                image.channels()
            )));
        }
        Ok(())
    }

    pub fn normalize_image(&self, image: &ImageBuffer) -> Result<ImageBuffer> {
        self.check(image)?;
        let plane = image.height() * image.width();
        let mut out = image.clone();
        for (c, chunk) in out.pixels_mut().chunks_exact_mut(plane).enumerate() {
            chunk
                .iter_mut()
                .for_each(|p| *p = (*p - self.mean[c]) / self.std[c]);
        }
        Ok(out)
    }

    pub fn denormalize_image(&self, image: &ImageBuffer) -> Result<ImageBuffer> {
        self.check(image)?;
        let plane = image.height() * image.width();
        let mut out = image.clone();
        for (c, chunk) in out.pixels_mut().chunks_exact_mut(plane).enumerate() {
            chunk
                .iter_mut()
                .for_each(|p| *p = *p * self.std[c] + self.mean[c]);
        }
        Ok(out)
    }
}

/// Applies `(pixel - mean) / std` per channel.
pub fn normalize(dataset: &LabeledDataset, stats: &NormalizationStats) -> Result<LabeledDataset> {
    let images = dataset
        .images
        .iter()
        .map(|im| stats.normalize_image(im))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset {
        images,
        ..dataset.clone()
    })
}

pub fn denormalize(dataset: &LabeledDataset, stats: &NormalizationStats) -> Result<LabeledDataset> {
    let images = dataset
        .images
        .iter()
        .map(|im| stats.denormalize_image(im))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset {
        images,
        ..dataset.clone()
    })
}

const DATASET_MAGIC: &[u8; 8] = b"SAUGDATA";
const DATASET_VERSION: u32 = 1;

/// Writes the dataset container: magic, version, class count, split, sample
/// count, image shape, `u32` labels, then `f64` pixels, all little-endian.
pub fn write_dataset<W: Write>(dataset: &LabeledDataset, mut out: W) -> Result<()> {
    let (c, h, w) = dataset.image_shape().unwrap_or((0, 0, 0));
    out.write_all(DATASET_MAGIC)?;
    out.write_all(&DATASET_VERSION.to_le_bytes())?;
    out.write_all(&(dataset.num_classes as u32).to_le_bytes())?;
    out.write_all(&[match dataset.split {
        Split::Train => 0,
        Split::Test => 1,
    }])?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    for d in [c, h, w] {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    for &l in &dataset.labels {
        out.write_all(&(l as u32).to_le_bytes())?;
    }
    for im in &dataset.images {
        for p in im.pixels() {
            out.write_all(&p.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.pos,
                message: format!("need {n} more bytes, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_dataset<R: Read>(mut input: R) -> Result<LabeledDataset> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(8)? != DATASET_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: "bad dataset magic".into(),
        });
    }
    let version = cur.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Parse {
            offset: 8,
            message: format!("unsupported version {version}"),
        });
    }
    let num_classes = cur.u32()? as usize;
    let split = match cur.take(1)?[0] {
        0 => Split::Train,
        1 => Split::Test,
        s => {
            return Err(Error::Parse {
                offset: cur.pos - 1,
                message: format!("bad split tag {s}"),
            })
        }
    };
    let count = cur.u64()? as usize;
    let (c, h, w) = (cur.u32()? as usize, cur.u32()? as usize, cur.u32()? as usize);
    let needed = count.checked_mul(4 + 8 * c * h * w).ok_or_else(|| Error::Parse {
        offset: cur.pos,
        message: "size overflow".into(),
    })?;
    if bytes.len() - cur.pos != needed {
        return Err(Error::Parse {
            offset: cur.pos,
            message: format!("expected {needed} payload bytes, found {}", bytes.len() - cur.pos),
        });
    }
    let labels = (0..count)
        .map(|_| cur.u32().map(|l| l as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = cur.take(8 * c * h * w)?;
        let pixels = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        images.push(ImageBuffer::new(c, h, w, pixels)?);
    }
    LabeledDataset::new(images, labels, num_classes, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycling_record(label: u8) -> Vec<u8> {
        let mut rec = vec![label];
        rec.extend((0..CIFAR_PIXELS).map(|i| (i % 256) as u8));
        rec
    }

    #[test]
    fn empty_streams() {
        assert!(parse_cifar10(&[]).unwrap().is_empty());
        assert!(parse_cifar100(&[]).unwrap().is_empty());
    }

    #[test]
    fn cifar10_single_record() {
        let ds = parse_cifar10(&cycling_record(7)).unwrap();
        assert_eq!(ds.labels, vec![7]);
        assert_eq!(ds.num_classes, 10);
        assert_eq!(ds.images[0].get(0, 0, 0), 0.0);
        assert_eq!(ds.images[0].get(0, 0, 1), 1.0 / 255.0);
        // Plane G starts at byte 1024, which cycles back to 0.
        assert_eq!(ds.images[0].get(1, 0, 0), 0.0);
        assert_eq!(ds.images[0].get(0, 1, 0), 32.0 / 255.0);
    }

    #[test]
    fn cifar10_truncation_offset() {
        let mut bytes = cycling_record(1);
        bytes.extend(cycling_record(2));
        bytes.push(0);
        match parse_cifar10(&bytes) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6146),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn cifar10_bad_label() {
        assert!(matches!(
            parse_cifar10(&cycling_record(10)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn cifar100_fine_label() {
        let mut rec = vec![3, 42];
        rec.extend(std::iter::repeat_n(9, CIFAR_PIXELS));
        let ds = parse_cifar100(&rec).unwrap();
        assert_eq!(ds.labels, vec![42]);
        assert_eq!(ds.num_classes, 100);
    }

    #[test]
    fn cifar100_bad_fine_label_names_record() {
        let mut bytes = Vec::new();
        for fine in [1u8, 200] {
            bytes.extend([0, fine]);
            bytes.extend(std::iter::repeat_n(0, CIFAR_PIXELS));
        }
        let err = parse_cifar100(&bytes).unwrap_err();
        assert!(err.to_string().contains("record 1"), "{err}");
    }

    #[test]
    fn synth_is_balanced_and_deterministic() {
        let a = synth_shapes(10, 4, 5).unwrap();
        assert_eq!(a.len(), 40);
        assert_eq!(a.class_counts(), vec![10; 4]);
        assert_eq!(a, synth_shapes(10, 4, 5).unwrap());
        assert_ne!(a.images, synth_shapes(10, 4, 6).unwrap().images);
        assert!(synth_shapes(1, 9, 0).is_err());
        assert!(synth_shapes(0, 4, 0).is_err());
    }

    #[test]
    fn flip_cases() {
        let img = ImageBuffer::new(1, 1, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(flip_horizontal(&img).pixels(), &[2.0, 1.0]);
        let ds = synth_shapes(1, 2, 3).unwrap();
        let im = &ds.images[0];
        assert_eq!(&flip_horizontal(&flip_horizontal(im)), im);
        let s: f64 = im.pixels().iter().sum();
        let f: f64 = flip_horizontal(im).pixels().iter().sum();
        assert!((s - f).abs() < 1e-9);
    }

    #[test]
    fn normalization_cases() {
        let ds =
            LabeledDataset::new(vec![ImageBuffer::filled(3, 2, 2, 0.5)], vec![0], 2, Split::Train).unwrap();
        let id = NormalizationStats::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(normalize(&ds, &id).unwrap(), ds);
        let st = NormalizationStats::new(vec![0.5; 3], vec![0.25; 3]).unwrap();
        assert!(normalize(&ds, &st).unwrap().images[0]
            .pixels()
            .iter()
            .all(|&p| p == 0.0));
        assert!(NormalizationStats::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn train_stats_normalize_to_unit() {
        let ds = synth_shapes(5, 3, 1).unwrap();
        let stats = NormalizationStats::from_dataset(&ds).unwrap();
        let norm = normalize(&ds, &stats).unwrap();
        let again = NormalizationStats::from_dataset(&norm).unwrap();
        for c in 0..3 {
            assert!(again.mean[c].abs() < 1e-9);
            assert!((again.std[c] - 1.0).abs() < 1e-9);
        }
        let back = denormalize(&norm, &stats).unwrap();
        for (a, b) in back.images.iter().zip(&ds.images) {
            for (x, y) in a.pixels().iter().zip(b.pixels()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn container_round_trip_and_truncation() {
        let mut ds = synth_shapes(2, 3, 9).unwrap();
        ds.split = Split::Test;
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
        buf.pop();
        assert!(read_dataset(buf.as_slice()).is_err());
    }
}
