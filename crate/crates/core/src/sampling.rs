//! Crop-parameter samplers.
//!
//! Translation samplers return integer offsets for same-size crops. The
//! crop-and-resize samplers return [`CropWindow`]s whose `(tx, ty)` is the
//! offset between crop center and image center; use
//! [`CropWindow::centered_to_corner`] to place them in image coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CropWindow;
use crate::rng::RandomSource;

pub const DEFAULT_MAX_REJECTIONS: usize = 100;

/// Clipped Gaussian offsets `N(0, sigma * L)` with `|t| <= L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCropConfig {
    /// Relative spread, as a fraction of `length`.
    pub sigma: f64,
    /// Longer image edge in pixels.
    pub length: usize,
    pub max_rejections: usize,
}

impl GaussianCropConfig {
    pub fn new(sigma: f64, length: usize) -> Result<Self> {
        let cfg = Self {
            sigma,
            length,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::precondition(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.length == 0 {
            return Err(Error::precondition("crop length must be positive"));
        }
        if self.max_rejections == 0 {
            return Err(Error::precondition("max_rejections must be at least 1"));
        }
        Ok(())
    }

    /// Draws `(tx, ty)` independently.
    pub fn draw_translation(&self, rng: &mut RandomSource) -> (i64, i64) {
        let limit = self.length as f64;
        let sigma_abs = self.sigma * limit;
        let tx = draw_offset_with(limit, sigma_abs, self.max_rejections, rng);
        let ty = draw_offset_with(limit, sigma_abs, self.max_rejections, rng);
        (tx, ty)
    }
}

/// Integer offset from a Gaussian clipped to `|x| <= limit`, with
/// [`DEFAULT_MAX_REJECTIONS`] attempts.
pub fn draw_offset(limit: f64, sigma_abs: f64, rng: &mut RandomSource) -> i64 {
    draw_offset_with(limit, sigma_abs, DEFAULT_MAX_REJECTIONS, rng)
}

/// Rejection-samples `x ~ N(0, sigma_abs)` until `|x| <= limit` and returns
/// `x` truncated toward zero. Returns 0 when every attempt is rejected.
pub fn draw_offset_with(limit: f64, sigma_abs: f64, max_rejections: usize, rng: &mut RandomSource) -> i64 {
    for _ in 0..max_rejections {
        let x = rng.normal(sigma_abs);
        if x.abs() <= limit {
            return x.trunc() as i64;
        }
    }
    0
}

/// Uniform integer in `{-range, ..., range}`.
pub fn draw_uniform_offset(range: u32, rng: &mut RandomSource) -> i64 {
    let r = i64::from(range);
    rng.int_inclusive(-r, r)
}

/// Two-parameter crop-and-resize sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResizeCropConfig {
    pub sigma: f64,
    pub input_w: usize,
    pub input_h: usize,
    /// Minimum crop resolution in pixels.
    pub l_min: usize,
}

impl ResizeCropConfig {
    pub fn new(sigma: f64, input_w: usize, input_h: usize, l_min: usize) -> Result<Self> {
        let cfg = Self {
            sigma,
            input_w,
            input_h,
            l_min,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::precondition(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.input_w == 0 || self.input_h == 0 || self.l_min == 0 {
            return Err(Error::precondition("input size and l_min must be positive"));
        }
        if self.l_min > self.input_w.min(self.input_h) {
            return Err(Error::precondition(format!(
                "l_min {} exceeds the shorter input edge {}",
                self.l_min,
                self.input_w.min(self.input_h)
            )));
        }
        Ok(())
    }
}

/// Draws a centered crop window: size shrink from a rectified (`max(0, x)`),
/// clipped normal, then center offsets from clipped normals so the window always
/// touches the image.
pub fn draw_resize_crop(cfg: &ResizeCropConfig, rng: &mut RandomSource) -> CropWindow {
    let (big_w, big_h) = (cfg.input_w as f64, cfg.input_h as f64);
    let span_w = big_w - cfg.l_min as f64;
    let span_h = big_h - cfg.l_min as f64;

    let dw = rng.normal(cfg.sigma * span_w).max(0.0).min(span_w).trunc();
    let dh = rng.normal(cfg.sigma * span_h).max(0.0).min(span_h).trunc();
    let w = cfg.input_w as i64 - dw as i64;
    let h = cfg.input_h as i64 - dh as i64;

    let tx = draw_offset((big_w + w as f64) / 2.0, cfg.sigma * (big_w + w as f64), rng);
    let ty = draw_offset((big_h + h as f64) / 2.0, cfg.sigma * (big_h + h as f64), rng);
    CropWindow { tx, ty, w, h }
}

/// Conventional scale/aspect-ratio crop-and-resize parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardCropConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl Default for StandardCropConfig {
    fn default() -> Self {
        Self {
            scale_min: 0.08,
            scale_max: 1.0,
            ratio_min: 3.0 / 4.0,
            ratio_max: 4.0 / 3.0,
        }
    }
}

impl StandardCropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.scale_min && self.scale_min <= self.scale_max && self.scale_max <= 1.0) {
            return Err(Error::precondition(format!(
                "need 0 < scale_min <= scale_max <= 1, got [{}, {}]",
                self.scale_min, self.scale_max
            )));
        }
        if !(0.0 < self.ratio_min && self.ratio_min <= self.ratio_max) {
            return Err(Error::precondition(format!(
                "need 0 < ratio_min <= ratio_max, got [{}, {}]",
                self.ratio_min, self.ratio_max
            )));
        }
        Ok(())
    }
}

const STANDARD_CROP_ATTEMPTS: usize = 10;

/// Standard random-resized-crop draw on a `width x height` image: uniform
/// scale, log-uniform aspect ratio, uniform in-bounds position, with a
/// center-crop fallback after 10 failed attempts. The returned window is in
/// the centered frame.
pub fn draw_standard_resize_crop(
    cfg: &StandardCropConfig,
    width: usize,
    height: usize,
    rng: &mut RandomSource,
) -> CropWindow {
    let area = (width * height) as f64;
    let (log_lo, log_hi) = (cfg.ratio_min.ln(), cfg.ratio_max.ln());
    for _ in 0..STANDARD_CROP_ATTEMPTS {
        let target_area = area * rng.uniform_range(cfg.scale_min, cfg.scale_max);
        let aspect = rng.uniform_range(log_lo, log_hi).exp();
        let w = (target_area * aspect).sqrt().round() as i64;
        let h = (target_area / aspect).sqrt().round() as i64;
        if 0 < w && w <= width as i64 && 0 < h && h <= height as i64 {
            let top = rng.int_inclusive(0, height as i64 - h);
            let left = rng.int_inclusive(0, width as i64 - w);
            return CropWindow {
                tx: left,
                ty: top,
                w,
                h,
            }
            .corner_to_centered(width, height);
        }
    }

    let in_ratio = width as f64 / height as f64;
    let (w, h) = if in_ratio < cfg.ratio_min {
        let w = width as i64;
        (
            w,
            ((w as f64 / cfg.ratio_min).round() as i64).clamp(1, height as i64),
        )
    } else if in_ratio > cfg.ratio_max {
        let h = height as i64;
        (
            ((h as f64 * cfg.ratio_max).round() as i64).clamp(1, width as i64),
            h,
        )
    } else {
        (width as i64, height as i64)
    };
    CropWindow { tx: 0, ty: 0, w, h }
}

/// Crop sampler selected by an experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CropSampler {
    /// No crop; every sample keeps full visibility.
    Identity,
    /// Same-size translation with offsets from `U{-range..range}`.
    Uniform { range: u32 },
    /// Same-size translation with clipped Gaussian offsets.
    Gaussian { sigma: f64 },
    /// Rectified-normal crop-and-resize.
    ResizeCrop { sigma: f64, l_min: usize },
    /// Scale/ratio crop-and-resize baseline.
    StandardResizeCrop(StandardCropConfig),
}

/// Crop parameters drawn by a [`CropSampler`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CropDraw {
    Translation { tx: i64, ty: i64 },
    Resize(CropWindow),
}

impl CropSampler {
    /// Spread parameter subject to late-training decay, if any.
    pub fn sigma(&self) -> Option<f64> {
        match self {
            CropSampler::Gaussian { sigma } | CropSampler::ResizeCrop { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    pub fn with_sigma(&self, new_sigma: f64) -> CropSampler {
        match *self {
            CropSampler::Gaussian { .. } => CropSampler::Gaussian { sigma: new_sigma },
            CropSampler::ResizeCrop { l_min, .. } => CropSampler::ResizeCrop {
                sigma: new_sigma,
                l_min,
            },
            other => other,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        match self {
            CropSampler::Identity | CropSampler::Uniform { .. } => Ok(()),
            CropSampler::Gaussian { sigma } => GaussianCropConfig::new(*sigma, width.max(height)).map(|_| ()),
            CropSampler::ResizeCrop { sigma, l_min } => {
                ResizeCropConfig::new(*sigma, width, height, *l_min).map(|_| ())
            }
            CropSampler::StandardResizeCrop(cfg) => cfg.validate(),
        }
    }

    pub fn draw(&self, width: usize, height: usize, rng: &mut RandomSource) -> CropDraw {
        match self {
            CropSampler::Identity => CropDraw::Translation { tx: 0, ty: 0 },
            CropSampler::Uniform { range } => {
                let r = (*range).min(width.min(height) as u32);
                let tx = draw_uniform_offset(r, rng);
                let ty = draw_uniform_offset(r, rng);
                CropDraw::Translation { tx, ty }
            }
            CropSampler::Gaussian { sigma } => {
                let cfg = GaussianCropConfig {
                    sigma: *sigma,
                    length: width.max(height),
                    max_rejections: DEFAULT_MAX_REJECTIONS,
                };
                let (tx, ty) = cfg.draw_translation(rng);
                CropDraw::Translation { tx, ty }
            }
            CropSampler::ResizeCrop { sigma, l_min } => {
                let cfg = ResizeCropConfig {
                    sigma: *sigma,
                    input_w: width,
                    input_h: height,
                    l_min: *l_min,
                };
                CropDraw::Resize(draw_resize_crop(&cfg, rng))
            }
            CropSampler::StandardResizeCrop(cfg) => {
                CropDraw::Resize(draw_standard_resize_crop(cfg, width, height, rng))
            }
        }
    }
}
