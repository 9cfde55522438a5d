//! Soft augmentation: crop augmentation whose learning target and sample
//! weight soften with how much of the image the crop keeps.
//!
//! The pipeline for one training sample is
//! [`sampling`] (draw crop parameters) → [`geometry`] (apply the crop and
//! measure visibility) → [`softening`] (visibility to confidence) →
//! [`loss`] (weighted KL against a softened one-hot target). [`train`] runs
//! it with a small [`model::MlpClassifier`]; [`metrics`] measures top-1
//! error, calibration and occlusion robustness. [`sslweights`] applies the
//! same curve to IoU-weighted self-supervised crop pairs.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod softening;
pub mod sslweights;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{CropWindow, Visibility};
pub use image::ImageBuffer;
pub use loss::LossMode;
pub use model::MlpClassifier;
pub use rng::RandomSource;
pub use sampling::CropSampler;
pub use softening::{Confidence, SofteningMode, SofteningPolicy};
