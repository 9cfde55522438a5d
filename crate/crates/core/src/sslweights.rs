//! IoU-driven weights for self-supervised crop pairs.
//!
//! Integration: multiply each pair's similarity loss by its weight before
//! averaging over the batch. With `normalize` the batch mean weight is 1,
//! so the effective learning rate is unchanged.

use crate::error::{Error, Result};
use crate::geometry::{iou, CropWindow};
use crate::softening::{ssl_pair_confidence, SofteningPolicy, SslHypothesis};

/// Two crops of one `image_w x image_h` image, in the centered frame used
/// by the crop-and-resize samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropPair {
    pub phi1: CropWindow,
    pub phi2: CropWindow,
    pub image_w: usize,
    pub image_h: usize,
}

impl CropPair {
    pub fn new(phi1: CropWindow, phi2: CropWindow, image_w: usize, image_h: usize) -> Result<Self> {
        let pair = Self {
            phi1,
            phi2,
            image_w,
            image_h,
        };
        let image = CropWindow::translation(0, 0, image_w, image_h);
        for (name, w) in [("phi1", phi1), ("phi2", phi2)] {
            if w.centered_to_corner(image_w, image_h).intersection_area(&image) == 0 {
                return Err(Error::precondition(format!(
                    "{name} does not intersect the image"
                )));
            }
        }
        Ok(pair)
    }

    /// IoU of the two crops in image coordinates.
    pub fn iou(&self) -> f64 {
        let a = self.phi1.centered_to_corner(self.image_w, self.image_h);
        let b = self.phi2.centered_to_corner(self.image_w, self.image_h);
        iou(&a, &b)
    }
}

pub fn pair_weights(
    pairs: &[CropPair],
    policy: &SofteningPolicy,
    hypothesis: SslHypothesis,
    normalize: bool,
) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::domain("pair_weights of an empty batch"));
    }
    let weights = pairs
        .iter()
        .map(|p| ssl_pair_confidence(p.iou(), policy, hypothesis).map(|c| c.value()))
        .collect::<Result<Vec<_>>>()?;
    if !normalize {
        return Ok(weights);
    }
    // Zero weights (p_min = 0) are allowed here as long as the batch is not
    // entirely zero.
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::domain("all pair weights are zero; cannot normalize"));
    }
    Ok(weights.into_iter().map(|w| w / mean).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::softening::SofteningMode;

    fn win(tx: i64, ty: i64, w: i64, h: i64) -> CropWindow {
        CropWindow::new(tx, ty, w, h).unwrap()
    }

    #[test]
    fn identical_pairs_get_unit_weight() {
        let pol = SofteningPolicy::new(2.0, 0.1, SofteningMode::Weight).unwrap();
        let pairs: Vec<_> = (0..4)
            .map(|i| CropPair::new(win(i, -i, 20, 24), win(i, -i, 20, 24), 32, 32).unwrap())
            .collect();
        for norm in [false, true] {
            assert_eq!(
                pair_weights(&pairs, &pol, SslHypothesis::Sa1, norm).unwrap(),
                vec![1.0; 4]
            );
        }
    }

    #[test]
    fn disjoint_pair_gets_chance() {
        let pol = SofteningPolicy::new(2.0, 0.1, SofteningMode::Weight).unwrap();
        let pair = CropPair::new(win(-8, 0, 16, 32), win(8, 0, 16, 32), 32, 32).unwrap();
        assert_eq!(pair.iou(), 0.0);
        assert_eq!(
            pair_weights(&[pair], &pol, SslHypothesis::Sa1, false).unwrap(),
            vec![0.1]
        );
    }

    #[test]
    fn zero_and_one_iou_normalized() {
        let pol = SofteningPolicy::new(1.0, 0.0, SofteningMode::Weight).unwrap();
        let disjoint = CropPair::new(win(-8, 0, 16, 32), win(8, 0, 16, 32), 32, 32).unwrap();
        let same = CropPair::new(win(0, 0, 16, 16), win(0, 0, 16, 16), 32, 32).unwrap();
        let w = pair_weights(&[disjoint, same], &pol, SslHypothesis::Sa1, true).unwrap();
        assert_eq!(w, vec![0.0, 2.0]);
        assert!(pair_weights(&[disjoint], &pol, SslHypothesis::Sa1, true).is_err());
    }

    #[test]
    fn rejects_empty_and_outside() {
        let pol = SofteningPolicy::new(1.0, 0.0, SofteningMode::Weight).unwrap();
        assert!(pair_weights(&[], &pol, SslHypothesis::Sa2, false).is_err());
        assert!(CropPair::new(win(40, 0, 8, 8), win(0, 0, 8, 8), 32, 32).is_err());
    }
}
