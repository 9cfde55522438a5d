//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the code path it checks.
#![allow(dead_code)]

use soft_augment::image::ImageBuffer;
use soft_augment::metrics::PredictionRecord;
use soft_augment::rng::RandomSource;
use soft_augment::CropWindow;

/// Per-pixel translated crop: reads `(c, i + tx, j + ty)` or 0 when outside.
pub fn reference_translate(image: &ImageBuffer, tx: i64, ty: i64) -> ImageBuffer {
    let (c, h, w) = (image.channels(), image.height(), image.width());
    let mut out = ImageBuffer::zeros(c, h, w);
    for ch in 0..c {
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                let (si, sj) = (i + tx, j + ty);
                if si >= 0 && si < h as i64 && sj >= 0 && sj < w as i64 {
                    out.set(
                        ch,
                        i as usize,
                        j as usize,
                        image.get(ch, si as usize, sj as usize),
                    );
                }
            }
        }
    }
    out
}

/// IoU by counting unit cells covered by each window.
pub fn cell_count_iou(a: &CropWindow, b: &CropWindow) -> f64 {
    let x0 = a.tx.min(b.tx);
    let y0 = a.ty.min(b.ty);
    let x1 = (a.tx + a.w).max(b.tx + b.w);
    let y1 = (a.ty + a.h).max(b.ty + b.h);
    let inside = |w: &CropWindow, x: i64, y: i64| x >= w.tx && x < w.tx + w.w && y >= w.ty && y < w.ty + w.h;
    let (mut inter, mut union) = (0u64, 0u64);
    for x in x0..x1 {
        for y in y0..y1 {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// ECE by scanning the full prediction list once per bin. Bin `m` (1-based)
/// holds confidences in `((m-1)/M, m/M]`; confidence 0 belongs to bin 1.
pub fn brute_force_ece(preds: &[PredictionRecord], num_bins: usize) -> f64 {
    let n = preds.len() as f64;
    let m_f = num_bins as f64;
    let mut total = 0.0;
    for m in 1..=num_bins {
        let lo = (m - 1) as f64 / m_f;
        let hi = m as f64 / m_f;
        let mut count = 0usize;
        let mut correct = 0usize;
        let mut conf_sum = 0.0;
        for p in preds {
            let c = p.confidence;
            let in_bin = (c > lo && c <= hi) || (m == 1 && c == 0.0);
            if in_bin {
                count += 1;
                conf_sum += c;
                if p.predicted_class == p.true_class {
                    correct += 1;
                }
            }
        }
        if count > 0 {
            let cnt = count as f64;
            total += (cnt / n) * (correct as f64 / cnt - conf_sum / cnt).abs();
        }
    }
    total
}

/// Random prediction set with `num_classes` classes.
pub fn random_predictions(rng: &mut RandomSource, n: usize, num_classes: usize) -> Vec<PredictionRecord> {
    (0..n)
        .map(|_| {
            let sharp = rng.uniform_range(0.1, 6.0);
            let raw: Vec<f64> = (0..num_classes).map(|_| (rng.normal(sharp)).exp()).collect();
            let s: f64 = raw.iter().sum();
            let probs = raw.into_iter().map(|x| x / s).collect();
            PredictionRecord::from_probs(probs, rng.index(num_classes))
        })
        .collect()
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Relative error with a small floor on the denominator.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// `-p log softmax(z)_c + p log p`: the undistributed soft target with weight 1.
pub fn undistributed_target_loss(logits: &[f64], class: usize, p: f64) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    -p * (logits[class] - lse) + p * p.ln()
}

/// Naive triple-loop MLP forward pass over `(weights, bias)` layers.
pub fn reference_forward(layers: &[(Vec<Vec<f64>>, Vec<f64>)], input: &[f64]) -> Vec<f64> {
    let mut a = input.to_vec();
    for (li, (w, b)) in layers.iter().enumerate() {
        let mut z = vec![0.0; b.len()];
        for o in 0..b.len() {
            let mut acc = b[o];
            for i in 0..a.len() {
                acc += w[o][i] * a[i];
            }
            z[o] = acc;
        }
        if li + 1 < layers.len() {
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        a = z;
    }
    a
}

pub fn random_image(rng: &mut RandomSource, c: usize, h: usize, w: usize) -> ImageBuffer {
    let pixels = (0..c * h * w).map(|_| rng.normal(1.0)).collect();
    ImageBuffer::new(c, h, w, pixels).unwrap()
}
