//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use soft_augment::experiment::{cmd_compare, prepare_data, run_experiment, Comparison, ExperimentConfig};
use soft_augment::geometry::{iou, pad_and_crop, visibility, Visibility};
use soft_augment::loss::{soft_loss, soft_loss_grad, softmax};
use soft_augment::metrics::{ece, evaluate, occlusion_sweep, top1_error, PredictionRecord};
use soft_augment::sampling::{draw_resize_crop, ResizeCropConfig};
use soft_augment::softening::{
    normalize_batch_weights, soften, ssl_pair_confidence, Confidence, SslHypothesis,
};
use soft_augment::{
    CropSampler, CropWindow, LossMode, MlpClassifier, RandomSource, SofteningMode, SofteningPolicy,
};

use common::{
    brute_force_ece, cell_count_iou, central_difference, random_image, random_predictions,
    reference_translate, rel_err,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = RandomSource::new(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let logits: Vec<f64> = (0..10).map(|_| rng.normal(2.0)).collect();
        let class = rng.index(10);
        let p = Confidence::new(rng.uniform_range(0.1, 1.0)).unwrap();
        for mode in LossMode::ALL {
            let grad = soft_loss_grad(&logits, class, p, mode).unwrap();
            let mut f = |z: &[f64]| soft_loss(z, class, p, mode).unwrap();
            for (i, &g) in grad.iter().enumerate() {
                worst = worst.max(rel_err(g, central_difference(&mut f, &logits, i, 1e-4)));
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-4 && t < Duration::from_secs(5),
        format!("max rel err {worst:.3e} (< 1e-4), {:.2}s (< 5s)", secs(t)),
    )
}

fn loss_algebra() -> Outcome {
    let mut rng = RandomSource::new(2);
    let (mut loss_gap, mut grad_mismatch, mut ce_gap) = (0.0f64, 0usize, 0.0f64);
    for _ in 0..1000 {
        let n = 2 + rng.index(19);
        let logits: Vec<f64> = (0..n).map(|_| rng.normal(3.0)).collect();
        let class = rng.index(n);
        let p = Confidence::new(rng.uniform_range(1.0 / n as f64, 1.0)).unwrap();
        let hard = soft_loss(&logits, class, p, LossMode::Hard).unwrap();
        let weight = soft_loss(&logits, class, p, LossMode::Weight).unwrap();
        loss_gap = loss_gap.max((weight - p.value() * hard).abs());
        let gh = soft_loss_grad(&logits, class, p, LossMode::Hard).unwrap();
        let gw = soft_loss_grad(&logits, class, p, LossMode::Weight).unwrap();
        grad_mismatch += gw.iter().zip(&gh).filter(|(w, h)| **w != p.value() * **h).count();

        let ce = -softmax(&logits)[class].ln();
        for mode in LossMode::ALL {
            ce_gap = ce_gap.max((soft_loss(&logits, class, Confidence::ONE, mode).unwrap() - ce).abs());
        }
    }
    outcome(
        loss_gap == 0.0 && grad_mismatch == 0 && ce_gap < 1e-10,
        format!("weight-vs-p*hard loss gap {loss_gap:.1e}, gradient mismatches {grad_mismatch}, p=1 vs CE gap {ce_gap:.1e} (< 1e-10)"),
    )
}

fn curve_boundaries() -> Outcome {
    let mut rng = RandomSource::new(3);
    let mut violations = 0;
    for i in 0..10_000 {
        let k = if i % 10 == 0 {
            0.0
        } else {
            rng.uniform_range(0.0, 8.0)
        };
        let p_min = rng.uniform_range(0.0, 0.99);
        let pol = SofteningPolicy::new(k, p_min, SofteningMode::TargetAndWeight).unwrap();
        let p_at = |v: f64| soften(Visibility::new(v).unwrap(), &pol).value();
        let (a, b) = (rng.uniform(), rng.uniform());
        let (lo, hi) = (a.min(b), a.max(b));
        let (pa, pb) = (p_at(lo), p_at(hi));
        violations += usize::from(!(p_min..=1.0).contains(&pa) || !(p_min..=1.0).contains(&pb));
        violations += usize::from(pa > pb);
        violations += usize::from(p_at(1.0) != 1.0);
        violations += usize::from(p_at(0.0) != p_min);
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 10^4 (v, k, p_min)"),
    )
}

fn sampler_statistics() -> Outcome {
    let start = Instant::now();
    let draws = 100_000;
    let mut rng = RandomSource::new(4);
    let gaussian = CropSampler::Gaussian { sigma: 0.3 };
    let mut visible = 0usize;
    for _ in 0..draws {
        if let soft_augment::sampling::CropDraw::Translation { tx, ty } = gaussian.draw(32, 32, &mut rng) {
            visible += usize::from(visibility(tx, ty, 32, 32).unwrap().value() > 0.0);
        }
    }
    let frac = visible as f64 / draws as f64;

    let uniform = CropSampler::Uniform { range: 4 };
    let mut min_v = f64::INFINITY;
    for _ in 0..draws {
        if let soft_augment::sampling::CropDraw::Translation { tx, ty } = uniform.draw(32, 32, &mut rng) {
            min_v = min_v.min(visibility(tx, ty, 32, 32).unwrap().value());
        }
    }

    let cfg = ResizeCropConfig::new(0.3, 224, 224, 112).unwrap();
    let mut size_violations = 0;
    for _ in 0..draws {
        let w = draw_resize_crop(&cfg, &mut rng);
        size_violations += usize::from(!(112..=224).contains(&w.w) || !(112..=224).contains(&w.h));
    }
    let t = start.elapsed();
    outcome(
        frac >= 0.99 && min_v == 0.765625 && size_violations == 0 && t < Duration::from_secs(10),
        format!(
            "gaussian visible {frac:.5} (>= 0.99), uniform r=4 min v {min_v} (= 0.765625), resize size violations {size_violations}, {:.2}s (< 10s)",
            secs(t)
        ),
    )
}

fn ece_oracle() -> Outcome {
    let mut rng = RandomSource::new(5);
    let mut mismatches = 0;
    for i in 0..1000 {
        let (n, classes) = (1 + rng.index(500), 2 + rng.index(9));
        let preds = random_predictions(&mut rng, n, classes);
        let bins = if i % 2 == 0 { 10 } else { 1 + rng.index(20) };
        mismatches += usize::from(ece(&preds, bins).unwrap().ece != brute_force_ece(&preds, bins));
    }
    let rec = |c: f64, correct: bool| PredictionRecord {
        probs: vec![c, 1.0 - c],
        predicted_class: 0,
        confidence: c,
        true_class: usize::from(!correct),
    };
    let a = ece(&vec![rec(0.95, true); 4], 10).unwrap().ece;
    let b = ece(&[rec(0.75, true), rec(0.75, false)], 10).unwrap().ece;
    let fixtures = (a - 0.05).abs() < 1e-12 && (b - 0.25).abs() < 1e-12;
    outcome(
        mismatches == 0 && fixtures,
        format!("{mismatches} mismatches over 1000 sets; fixtures {a} (0.05), {b} (0.25)"),
    )
}

fn crop_geometry() -> Outcome {
    let mut rng = RandomSource::new(6);
    let mut crop_mismatch = 0;
    for _ in 0..20 {
        let img = random_image(&mut rng, 3, 32, 32);
        for tx in -32..=32 {
            for ty in -32..=32 {
                let got = pad_and_crop(&img, &CropWindow::translation(tx, ty, 32, 32)).unwrap();
                crop_mismatch += usize::from(got != reference_translate(&img, tx, ty));
            }
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut w = || {
            CropWindow::new(
                rng.int_inclusive(-20, 20),
                rng.int_inclusive(-20, 20),
                rng.int_inclusive(1, 24),
                rng.int_inclusive(1, 24),
            )
            .unwrap()
        };
        let (a, b) = (w(), w());
        worst = worst.max((iou(&a, &b) - cell_count_iou(&a, &b)).abs());
    }
    outcome(
        crop_mismatch == 0 && worst <= 1e-12,
        format!("{crop_mismatch} crop mismatches over 20 images x 65^2 offsets; max IoU gap {worst:.1e}"),
    )
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Criterion 7's comparison plus the soft-arm model of the first seed, kept
/// for the occlusion check.
struct DeskExperiment {
    comparison: Comparison,
    soft_model: MlpClassifier,
    soft_cfg: ExperimentConfig,
    elapsed: Duration,
}

fn desk_experiment() -> soft_augment::Result<DeskExperiment> {
    let start = Instant::now();
    let (hard, _) = ExperimentConfig::load(&config_dir().join("hard_uniform_r16.toml"))?;
    let (soft, _) = ExperimentConfig::load(&config_dir().join("soft_gaussian_k2.toml"))?;
    assert_eq!(hard.dataset, soft.dataset);
    let data = prepare_data(&soft.dataset)?;
    let mut comparison = Comparison {
        arm_a: Vec::new(),
        arm_b: Vec::new(),
    };
    let mut soft_model = None;
    for seed in 0..3u64 {
        let a = run_experiment(&hard.clone().with_seed(seed), &data)?;
        comparison.arm_a.push((seed, a.top1_error, a.calibration.ece));
        let b = run_experiment(&soft.clone().with_seed(seed), &data)?;
        comparison.arm_b.push((seed, b.top1_error, b.calibration.ece));
        soft_model.get_or_insert(b.model);
    }
    Ok(DeskExperiment {
        comparison,
        soft_model: soft_model.unwrap(),
        soft_cfg: soft,
        elapsed: start.elapsed(),
    })
}

fn directional(exp: &DeskExperiment) -> Outcome {
    let (hard_top1, hard_ece) = Comparison::mean(&exp.comparison.arm_a);
    let (soft_top1, soft_ece) = Comparison::mean(&exp.comparison.arm_b);
    let pass = soft_top1 <= hard_top1 && soft_ece <= hard_ece && exp.elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "(a) top-1 soft {soft_top1:.4} <= hard {hard_top1:.4}; (b) ECE soft {soft_ece:.4} <= hard {hard_ece:.4}; {:.0}s (< 600s)",
            secs(exp.elapsed)
        ),
    )
}

fn occlusion(exp: &DeskExperiment) -> Outcome {
    let data = prepare_data(&exp.soft_cfg.dataset).unwrap();
    let clean = top1_error(&evaluate(&exp.soft_model, &data.test).unwrap()).unwrap();
    let rows = occlusion_sweep(
        &exp.soft_model,
        &data.test,
        &[0.0, 0.2, 0.4, 0.6, 0.8],
        1,
        &RandomSource::new(8),
        0.0,
    )
    .unwrap();
    let (at0, at08) = (rows[0].top1_error, rows[4].top1_error);
    outcome(
        at08 >= at0 && at0 == clean,
        format!("error at 0.8 {at08:.4} >= at 0 {at0:.4}; lambda 0 row equals clean {clean:.4}"),
    )
}

fn ssl_weights() -> Outcome {
    let mut rng = RandomSource::new(9);
    let mut worst_mean = 0.0f64;
    for _ in 0..1000 {
        let ws: Vec<f64> = (0..1 + rng.index(256))
            .map(|_| rng.uniform_range(1e-3, 5.0))
            .collect();
        let norm = normalize_batch_weights(&ws).unwrap();
        worst_mean = worst_mean.max((norm.iter().sum::<f64>() / norm.len() as f64 - 1.0).abs());
    }
    let mut violations = 0;
    for _ in 0..10_000 {
        let pol = SofteningPolicy::new(
            rng.uniform_range(0.0, 6.0),
            rng.uniform_range(0.0, 0.99),
            SofteningMode::Weight,
        )
        .unwrap();
        let (a, b) = (rng.uniform(), rng.uniform());
        let (lo, hi) = (a.min(b), a.max(b));
        let conf = |iou: f64, h| ssl_pair_confidence(iou, &pol, h).unwrap().value();
        violations += usize::from(conf(lo, SslHypothesis::Sa1) > conf(hi, SslHypothesis::Sa1));
        violations += usize::from(conf(lo, SslHypothesis::Sa2) < conf(hi, SslHypothesis::Sa2));
        violations += usize::from(conf(a, SslHypothesis::Sa1) != conf(1.0 - a, SslHypothesis::Sa2));
    }
    outcome(
        worst_mean <= 1e-12 && violations == 0,
        format!("max |mean - 1| {worst_mean:.1e} (<= 1e-12); {violations} violations over 10^4 IoUs"),
    )
}

const SMALL_A: &str = r#"
[dataset]
source = "synth"
num_classes = 3
train_per_class = 20
test_per_class = 10
seed = 12

[sampler]
kind = "uniform"
range = 8

[softening]
mode = "none"

[train]
epochs = 4
batch_size = 16
lr0 = 0.02
seed = 3
hidden = [16]
"#;

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    std::fs::write(&a, SMALL_A).unwrap();
    let soft = SMALL_A
        .replace(
            "kind = \"uniform\"\nrange = 8",
            "kind = \"gaussian\"\nsigma = 0.3",
        )
        .replace("mode = \"none\"", "mode = \"target_and_weight\"\nk = 2.0");
    std::fs::write(&b, soft).unwrap();
    let first = cmd_compare(&a, &b, 2, None).unwrap();
    let second = cmd_compare(&a, &b, 2, None).unwrap();
    outcome(
        first.as_bytes() == second.as_bytes(),
        format!(
            "two compare runs, {} bytes each, identical: {}",
            first.len(),
            first == second
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!(
            "[{}] {n:>2}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    };
    report(1, "gradient correctness", gradient_correctness());
    report(2, "loss algebra", loss_algebra());
    report(3, "softening curve boundaries", curve_boundaries());
    report(4, "sampler statistics", sampler_statistics());
    report(5, "ECE oracle equivalence", ece_oracle());
    report(6, "crop geometry oracle", crop_geometry());
    match desk_experiment() {
        Ok(exp) => {
            report(7, "desk-scale directional experiment", directional(&exp));
            report(8, "occlusion sweep sanity", occlusion(&exp));
        }
        Err(e) => {
            report(
                7,
                "desk-scale directional experiment",
                outcome(false, format!("training failed: {e}")),
            );
            report(8, "occlusion sweep sanity", outcome(false, "no trained model"));
        }
    }
    report(9, "SSL weight properties", ssl_weights());
    report(10, "determinism", determinism());
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
