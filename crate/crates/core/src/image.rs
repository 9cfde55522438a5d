use crate::error::{Error, Result};

/// Dense `C x H x W` image, channel-major and row-major within a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    channels: usize,
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(channels: usize, height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::precondition(format!(
                "image dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::precondition(format!(
                "expected {} pixels for {channels}x{height}x{width}, got {}",
                channels * height * width,
                pixels.len()
            )));
        }
        if let Some(idx) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::precondition(format!("pixel {idx} is not finite")));
        }
        Ok(Self {
            channels,
            height,
            width,
            pixels,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        assert!(
            channels > 0 && height > 0 && width > 0,
            "image dimensions must be positive"
        );
        Self {
            channels,
            height,
            width,
            pixels: vec![value; channels * height * width],
        }
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn offset(&self, c: usize, row: usize, col: usize) -> usize {
        (c * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.pixels[self.offset(c, row, col)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, row: usize, col: usize, value: f64) {
        let idx = self.offset(c, row, col);
        self.pixels[idx] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }
}
