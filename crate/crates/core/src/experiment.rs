//! Config-driven experiment commands: train, curve, occlusion,
//! sampler-stats and compare.
//!
//! Configs are TOML with `[dataset]`, `[sampler]`, `[softening]`, `[train]`
//! and optional `[eval]` / `[output]` sections. `p_min` is always derived
//! from the dataset's class count.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{
    normalize, parse_cifar10, parse_cifar100, synth_shapes, LabeledDataset, NormalizationStats, Split,
};
use crate::error::{Error, Result};
use crate::geometry::Visibility;
use crate::image::ImageBuffer;
use crate::metrics::{ece, evaluate, occlusion_csv, occlusion_sweep, top1_error, CalibrationReport};
use crate::model::MlpClassifier;
use crate::report::{csv_line, fmt_sig6};
use crate::rng::RandomSource;
use crate::sampling::{CropDraw, CropSampler, StandardCropConfig};
use crate::softening::{soften, SofteningMode, SofteningPolicy};
use crate::train::{epoch_log_csv, train, SigmaDecay, TrainConfig};

pub const DEFAULT_ECE_BINS: usize = 10;
const TEST_SEED_SALT: u64 = 0x7E57_5EED;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    sampler: RawSampler,
    softening: RawSoftening,
    train: RawTrain,
    #[serde(default)]
    eval: RawEval,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    source: String,
    num_classes: Option<usize>,
    train_per_class: Option<usize>,
    test_per_class: Option<usize>,
    seed: Option<u64>,
    train_path: Option<PathBuf>,
    test_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampler {
    kind: String,
    sigma: Option<f64>,
    range: Option<u32>,
    l_min: Option<usize>,
    scale_min: Option<f64>,
    scale_max: Option<f64>,
    ratio_min: Option<f64>,
    ratio_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSoftening {
    mode: SofteningMode,
    k: Option<f64>,
    label_smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    epochs: usize,
    batch_size: usize,
    lr0: f64,
    #[serde(default = "default_momentum")]
    momentum: f64,
    #[serde(default = "default_weight_decay")]
    weight_decay: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_hidden")]
    hidden: Vec<usize>,
    #[serde(default = "default_true")]
    hflip: bool,
    sigma_decay_epochs: Option<usize>,
    sigma_decay_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    #[serde(default = "default_bins")]
    ece_bins: usize,
}

impl Default for RawEval {
    fn default() -> Self {
        Self {
            ece_bins: DEFAULT_ECE_BINS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

fn default_momentum() -> f64 {
    0.9
}
fn default_weight_decay() -> f64 {
    5e-4
}
fn default_hidden() -> Vec<usize> {
    vec![256]
}
fn default_true() -> bool {
    true
}
fn default_bins() -> usize {
    DEFAULT_ECE_BINS
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synth {
        num_classes: usize,
        train_per_class: usize,
        test_per_class: usize,
        seed: u64,
    },
    Cifar10 {
        train_path: PathBuf,
        test_path: PathBuf,
    },
    Cifar100 {
        train_path: PathBuf,
        test_path: PathBuf,
    },
}

impl DatasetSource {
    pub fn num_classes(&self) -> usize {
        match self {
            DatasetSource::Synth { num_classes, .. } => *num_classes,
            DatasetSource::Cifar10 { .. } => 10,
            DatasetSource::Cifar100 { .. } => 100,
        }
    }
}

/// Softening section with `p_min` still unresolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SofteningSpec {
    pub mode: SofteningMode,
    pub k: f64,
    pub label_smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub sampler: CropSampler,
    pub softening: SofteningSpec,
    pub train: TrainConfig,
    pub ece_bins: usize,
    pub output_dir: Option<PathBuf>,
}

fn require<T>(value: Option<T>, field: &str, why: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(field, format!("required {why}")))
}

fn forbid<T>(value: &Option<T>, field: &str, why: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::config(field, format!("not allowed {why}"))),
        None => Ok(()),
    }
}

/// Builds a sampler from its kind name and optional parameters, rejecting
/// parameters that do not belong to the kind.
pub fn sampler_from_parts(
    kind: &str,
    sigma: Option<f64>,
    range: Option<u32>,
    l_min: Option<usize>,
    standard: Option<StandardCropConfig>,
) -> Result<CropSampler> {
    let ctx = format!("for sampler kind `{kind}`");
    let sampler = match kind {
        "identity" => {
            forbid(&sigma, "sampler.sigma", &ctx)?;
            forbid(&range, "sampler.range", &ctx)?;
            forbid(&l_min, "sampler.l_min", &ctx)?;
            CropSampler::Identity
        }
        "uniform" => {
            forbid(&sigma, "sampler.sigma", &ctx)?;
            forbid(&l_min, "sampler.l_min", &ctx)?;
            CropSampler::Uniform {
                range: require(range, "sampler.range", &ctx)?,
            }
        }
        "gaussian" => {
            forbid(&range, "sampler.range", &ctx)?;
            forbid(&l_min, "sampler.l_min", &ctx)?;
            CropSampler::Gaussian {
                sigma: require(sigma, "sampler.sigma", &ctx)?,
            }
        }
        "resize_crop" => {
            forbid(&range, "sampler.range", &ctx)?;
            CropSampler::ResizeCrop {
                sigma: require(sigma, "sampler.sigma", &ctx)?,
                l_min: require(l_min, "sampler.l_min", &ctx)?,
            }
        }
        "standard_resize_crop" => {
            forbid(&sigma, "sampler.sigma", &ctx)?;
            forbid(&range, "sampler.range", &ctx)?;
            forbid(&l_min, "sampler.l_min", &ctx)?;
            CropSampler::StandardResizeCrop(standard.unwrap_or_default())
        }
        other => {
            return Err(Error::config(
                "sampler.kind",
                format!(
                    "unknown kind `{other}` (identity, uniform, gaussian, resize_crop, standard_resize_crop)"
                ),
            ))
        }
    };
    if standard.is_some() && !matches!(sampler, CropSampler::StandardResizeCrop(_)) {
        return Err(Error::config(
            "sampler.scale_min",
            format!("scale/ratio fields not allowed {ctx}"),
        ));
    }
    if let CropSampler::StandardResizeCrop(cfg) = &sampler {
        cfg.validate()
            .map_err(|e| Error::config("sampler", e.to_string()))?;
    }
    if let Some(s) = sampler.sigma() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::config("sampler.sigma", "must be > 0"));
        }
    }
    Ok(sampler)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<document>".to_string());
            Error::config(field, e.message().to_string())
        })?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = fs::read(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::config("--config", "config is not valid UTF-8"))?;
        Ok((Self::parse(text)?, bytes))
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let d = &raw.dataset;
        let dataset = match d.source.as_str() {
            "synth" => {
                forbid(&d.train_path, "dataset.train_path", "for source `synth`")?;
                forbid(&d.test_path, "dataset.test_path", "for source `synth`")?;
                let num_classes = require(d.num_classes, "dataset.num_classes", "for source `synth`")?;
                if !(2..=8).contains(&num_classes) {
                    return Err(Error::config(
                        "dataset.num_classes",
                        "synth supports 2..=8 classes",
                    ));
                }
                let train_per_class =
                    require(d.train_per_class, "dataset.train_per_class", "for source `synth`")?;
                let test_per_class =
                    require(d.test_per_class, "dataset.test_per_class", "for source `synth`")?;
                if train_per_class == 0 || test_per_class == 0 {
                    return Err(Error::config(
                        "dataset.train_per_class",
                        "per-class counts must be positive",
                    ));
                }
                DatasetSource::Synth {
                    num_classes,
                    train_per_class,
                    test_per_class,
                    seed: d.seed.unwrap_or(0),
                }
            }
            "cifar10" | "cifar100" => {
                let ctx = format!("for source `{}`", d.source);
                forbid(&d.num_classes, "dataset.num_classes", &ctx)?;
                forbid(&d.train_per_class, "dataset.train_per_class", &ctx)?;
                forbid(&d.test_per_class, "dataset.test_per_class", &ctx)?;
                forbid(&d.seed, "dataset.seed", &ctx)?;
                let train_path = require(d.train_path.clone(), "dataset.train_path", &ctx)?;
                let test_path = require(d.test_path.clone(), "dataset.test_path", &ctx)?;
                if d.source == "cifar10" {
                    DatasetSource::Cifar10 {
                        train_path,
                        test_path,
                    }
                } else {
                    DatasetSource::Cifar100 {
                        train_path,
                        test_path,
                    }
                }
            }
            other => {
                return Err(Error::config(
                    "dataset.source",
                    format!("unknown source `{other}` (synth, cifar10, cifar100)"),
                ))
            }
        };

        let s = &raw.sampler;
        let standard = if s.scale_min.is_some()
            || s.scale_max.is_some()
            || s.ratio_min.is_some()
            || s.ratio_max.is_some()
        {
            let def = StandardCropConfig::default();
            Some(StandardCropConfig {
                scale_min: s.scale_min.unwrap_or(def.scale_min),
                scale_max: s.scale_max.unwrap_or(def.scale_max),
                ratio_min: s.ratio_min.unwrap_or(def.ratio_min),
                ratio_max: s.ratio_max.unwrap_or(def.ratio_max),
            })
        } else {
            None
        };
        let sampler = sampler_from_parts(&s.kind, s.sigma, s.range, s.l_min, standard)?;

        let sf = &raw.softening;
        let k = sf.k.unwrap_or(2.0);
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::config("softening.k", "must be >= 0"));
        }
        if let Some(a) = sf.label_smoothing {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::config("softening.label_smoothing", "must be in [0, 1)"));
            }
            if !sf.mode.softens_target() && !sf.mode.softens_weight() {
                return Err(Error::config(
                    "softening.label_smoothing",
                    "needs a softening mode other than `none`",
                ));
            }
        }
        let softening = SofteningSpec {
            mode: sf.mode,
            k,
            label_smoothing: sf.label_smoothing,
        };
        let policy = SofteningPolicy::for_classes(k, dataset.num_classes(), sf.mode)
            .map_err(|e| Error::config("softening", e.to_string()))?;

        let t = &raw.train;
        let sigma_decay = match (t.sigma_decay_epochs, t.sigma_decay_factor) {
            (None, None) => None,
            (Some(final_epochs), Some(factor)) => Some(SigmaDecay { final_epochs, factor }),
            (Some(_), None) => {
                return Err(Error::config(
                    "train.sigma_decay_factor",
                    "required with sigma_decay_epochs",
                ))
            }
            (None, Some(_)) => {
                return Err(Error::config(
                    "train.sigma_decay_epochs",
                    "required with sigma_decay_factor",
                ))
            }
        };
        if t.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be positive"));
        }
        if !(t.lr0 > 0.0) {
            return Err(Error::config("train.lr0", "must be > 0"));
        }
        if !(0.0..1.0).contains(&t.momentum) {
            return Err(Error::config("train.momentum", "must be in [0, 1)"));
        }
        if !(t.weight_decay >= 0.0) {
            return Err(Error::config("train.weight_decay", "must be >= 0"));
        }
        if t.hidden.contains(&0) {
            return Err(Error::config("train.hidden", "layer widths must be positive"));
        }
        if let Some(d) = sigma_decay {
            if !(d.factor > 0.0) {
                return Err(Error::config("train.sigma_decay_factor", "must be > 0"));
            }
        }
        if raw.eval.ece_bins == 0 {
            return Err(Error::config("eval.ece_bins", "must be positive"));
        }
        let train = TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr0: t.lr0,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            seed: t.seed,
            hidden_layers: t.hidden.clone(),
            policy,
            label_smoothing: sf.label_smoothing,
            sampler,
            sigma_decay,
            hflip: t.hflip,
        };
        Ok(Self {
            dataset,
            sampler,
            softening,
            train,
            ece_bins: raw.eval.ece_bins,
            output_dir: raw.output.dir.clone(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self
    }
}

/// Normalized train/test splits; statistics come from the train split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub stats: NormalizationStats,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn prepare_data(source: &DatasetSource) -> Result<PreparedData> {
    let (train_raw, mut test_raw) = match source {
        DatasetSource::Synth {
            num_classes,
            train_per_class,
            test_per_class,
            seed,
        } => (
            synth_shapes(*train_per_class, *num_classes, *seed)?,
            synth_shapes(*test_per_class, *num_classes, seed ^ TEST_SEED_SALT)?,
        ),
        DatasetSource::Cifar10 {
            train_path,
            test_path,
        } => (
            parse_cifar10(&read_file(train_path)?)?,
            parse_cifar10(&read_file(test_path)?)?,
        ),
        DatasetSource::Cifar100 {
            train_path,
            test_path,
        } => (
            parse_cifar100(&read_file(train_path)?)?,
            parse_cifar100(&read_file(test_path)?)?,
        ),
    };
    test_raw.split = Split::Test;
    let stats = NormalizationStats::from_dataset(&train_raw)?;
    Ok(PreparedData {
        train: normalize(&train_raw, &stats)?,
        test: normalize(&test_raw, &stats)?,
        stats,
    })
}

/// Files written by [`cmd_train`].
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub dir: PathBuf,
    pub config_snapshot: PathBuf,
    pub epoch_log: PathBuf,
    pub metrics: PathBuf,
    pub calibration: PathBuf,
    pub checkpoint: PathBuf,
    pub top1_error: f64,
    pub ece: f64,
}

/// Test-split result of one training run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub model: MlpClassifier,
    pub epoch_log_csv: String,
    pub top1_error: f64,
    pub calibration: CalibrationReport,
}

pub fn run_experiment(cfg: &ExperimentConfig, data: &PreparedData) -> Result<RunResult> {
    let outcome = train(&data.train, &cfg.train)?;
    let preds = evaluate(&outcome.model, &data.test)?;
    Ok(RunResult {
        epoch_log_csv: epoch_log_csv(&outcome.log),
        top1_error: top1_error(&preds)?,
        calibration: ece(&preds, cfg.ece_bins)?,
        model: outcome.model,
    })
}

fn metrics_csv(top1: f64, ece_value: f64) -> String {
    let mut out = csv_line(["metric", "value"]);
    out.push_str(&csv_line(["top1_error".to_string(), fmt_sig6(top1)]));
    out.push_str(&csv_line(["ece".to_string(), fmt_sig6(ece_value)]));
    out
}

/// Trains per the config and writes `config.toml` (byte-identical copy of
/// the input, written first), `epochs.csv`, `metrics.csv`,
/// `calibration.csv` and `model.ckpt` into `out_dir`.
pub fn cmd_train(config_path: &Path, out_dir: Option<&Path>, seed: Option<u64>) -> Result<RunArtifact> {
    let (mut cfg, bytes) = ExperimentConfig::load(config_path)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::config("output.dir", "no output directory (use --out or [output] dir)"))?;
    fs::create_dir_all(&dir)?;
    let config_snapshot = dir.join("config.toml");
    fs::write(&config_snapshot, &bytes)?;

    let data = prepare_data(&cfg.dataset)?;
    let run = run_experiment(&cfg, &data)?;

    let epoch_log = dir.join("epochs.csv");
    fs::write(&epoch_log, &run.epoch_log_csv)?;
    let metrics = dir.join("metrics.csv");
    fs::write(&metrics, metrics_csv(run.top1_error, run.calibration.ece))?;
    let calibration = dir.join("calibration.csv");
    fs::write(&calibration, run.calibration.to_csv())?;
    let checkpoint = dir.join("model.ckpt");
    let mut buf = Vec::new();
    run.model.write_checkpoint(&mut buf)?;
    fs::write(&checkpoint, buf)?;

    Ok(RunArtifact {
        dir,
        config_snapshot,
        epoch_log,
        metrics,
        calibration,
        checkpoint,
        top1_error: run.top1_error,
        ece: run.calibration.ece,
    })
}

/// Softening curves as CSV `k,v,p` on a uniform grid of `resolution`
/// visibilities from 0 to 1, one block per `k`.
pub fn cmd_curve(ks: &[f64], p_min: f64, resolution: usize) -> Result<String> {
    if resolution < 2 {
        return Err(Error::config("--resolution", "must be at least 2"));
    }
    let mut out = csv_line(["k", "v", "p"]);
    for &k in ks {
        let policy = SofteningPolicy::new(k, p_min, SofteningMode::Target)
            .map_err(|e| Error::config("--k", e.to_string()))?;
        for i in 0..resolution {
            let v = if i == resolution - 1 {
                1.0
            } else {
                i as f64 / (resolution - 1) as f64
            };
            let p = soften(Visibility::new(v)?, &policy).value();
            out.push_str(&csv_line([fmt_sig6(k), fmt_sig6(v), fmt_sig6(p)]));
        }
    }
    Ok(out)
}

/// Occlusion sweep of a saved model on the config's test split.
pub fn cmd_occlusion(
    checkpoint: &Path,
    config_path: &Path,
    lambdas: &[f64],
    trials_per_image: usize,
    seed: u64,
) -> Result<String> {
    let (cfg, _) = ExperimentConfig::load(config_path)?;
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::config("--lambdas", format!("{l} outside [0, 1]")));
    }
    let model = MlpClassifier::read_checkpoint(read_file(checkpoint)?.as_slice())?;
    let data = prepare_data(&cfg.dataset)?;
    let input = data.test.images.first().map_or(0, ImageBuffer::len);
    let expected = cfg.train.layer_sizes(input, data.test.num_classes);
    if model.layer_sizes() != expected {
        return Err(Error::Checkpoint(format!(
            "checkpoint layers {:?} do not match the config's {:?}",
            model.layer_sizes(),
            expected
        )));
    }
    let rows = occlusion_sweep(
        &model,
        &data.test,
        lambdas,
        trials_per_image,
        &RandomSource::new(seed),
        0.0,
    )?;
    Ok(occlusion_csv(&rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Summary {
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
}

fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Summary {
        mean,
        std: var.sqrt(),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub const VISIBILITY_HISTOGRAM_BINS: usize = 10;

/// Monte-Carlo summary of a sampler on a `size x size` image as CSV
/// `statistic,value`: offset and size statistics, visibility statistics,
/// the fraction of draws with positive visibility, and a 10-bin visibility
/// histogram (`visibility_bin_m` covers `((m-1)/10, m/10]`, with 0 in bin 1).
pub fn cmd_sampler_stats(sampler: &CropSampler, size: usize, draws: usize, seed: u64) -> Result<String> {
    if draws == 0 {
        return Err(Error::config("--draws", "must be at least 1"));
    }
    if size == 0 {
        return Err(Error::config("--size", "must be positive"));
    }
    sampler
        .validate(size, size)
        .map_err(|e| Error::config("sampler", e.to_string()))?;
    let root = RandomSource::new(seed);
    let mut tx = Vec::with_capacity(draws);
    let mut ty = Vec::with_capacity(draws);
    let mut ws = Vec::with_capacity(draws);
    let mut hs = Vec::with_capacity(draws);
    let mut vis = Vec::with_capacity(draws);
    let mut rng = root.split(0);
    for _ in 0..draws {
        let draw = sampler.draw(size, size, &mut rng);
        let v = match draw {
            CropDraw::Translation { tx: x, ty: y } => {
                tx.push(x as f64);
                ty.push(y as f64);
                ws.push(size as f64);
                hs.push(size as f64);
                crate::geometry::visibility(x, y, size, size)?.value()
            }
            CropDraw::Resize(w) => {
                tx.push(w.tx as f64);
                ty.push(w.ty as f64);
                ws.push(w.w as f64);
                hs.push(w.h as f64);
                crate::geometry::crop_visibility(&w, size, size).value()
            }
        };
        vis.push(v);
    }
    let mut out = csv_line(["statistic", "value"]);
    let mut row = |name: String, value: f64| out.push_str(&csv_line([name, fmt_sig6(value)]));
    row("draws".into(), draws as f64);
    for (name, xs) in [
        ("tx", &tx),
        ("ty", &ty),
        ("w", &ws),
        ("h", &hs),
        ("visibility", &vis),
    ] {
        let s = summarize(xs);
        row(format!("{name}_mean"), s.mean);
        row(format!("{name}_std"), s.std);
        row(format!("{name}_min"), s.min);
        row(format!("{name}_max"), s.max);
    }
    let positive = vis.iter().filter(|&&v| v > 0.0).count();
    row("fraction_visible".into(), positive as f64 / draws as f64);
    let mut hist = [0usize; VISIBILITY_HISTOGRAM_BINS];
    for &v in &vis {
        hist[crate::metrics::calibration_bin(v, VISIBILITY_HISTOGRAM_BINS)] += 1;
    }
    for (m, c) in hist.iter().enumerate() {
        row(format!("visibility_bin_{}", m + 1), *c as f64 / draws as f64);
    }
    Ok(out)
}

/// Per-seed results of both arms plus the mean `B - A` delta.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(seed, top1_error, ece)` per seed.
    pub arm_a: Vec<(u64, f64, f64)>,
    pub arm_b: Vec<(u64, f64, f64)>,
}

impl Comparison {
    pub fn mean(rows: &[(u64, f64, f64)]) -> (f64, f64) {
        let n = rows.len() as f64;
        (
            rows.iter().map(|r| r.1).sum::<f64>() / n,
            rows.iter().map(|r| r.2).sum::<f64>() / n,
        )
    }

    pub fn mean_delta(&self) -> (f64, f64) {
        let (ta, ea) = Self::mean(&self.arm_a);
        let (tb, eb) = Self::mean(&self.arm_b);
        (tb - ta, eb - ea)
    }

    /// `arm,seed,top1_error,ece` with `2 * seeds` arm rows and a final
    /// `mean_delta` row (B minus A).
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["arm", "seed", "top1_error", "ece"]);
        for (arm, rows) in [("A", &self.arm_a), ("B", &self.arm_b)] {
            for (seed, top1, e) in rows.iter() {
                out.push_str(&csv_line([
                    arm.to_string(),
                    seed.to_string(),
                    fmt_sig6(*top1),
                    fmt_sig6(*e),
                ]));
            }
        }
        let (dt, de) = self.mean_delta();
        out.push_str(&csv_line([
            "mean_delta".to_string(),
            String::new(),
            fmt_sig6(dt),
            fmt_sig6(de),
        ]));
        out
    }
}

/// Trains both arms for seeds `base_seed .. base_seed + seeds` on the shared
/// dataset.
pub fn compare_configs(
    a: &ExperimentConfig,
    b: &ExperimentConfig,
    seeds: usize,
    base_seed: u64,
) -> Result<Comparison> {
    if seeds == 0 {
        return Err(Error::config("--seeds", "must be at least 1"));
    }
    if a.dataset != b.dataset {
        return Err(Error::config("dataset", "both arms must use the same dataset"));
    }
    let data = prepare_data(&a.dataset)?;
    let mut arm_a = Vec::with_capacity(seeds);
    let mut arm_b = Vec::with_capacity(seeds);
    for i in 0..seeds as u64 {
        let seed = base_seed + i;
        for (cfg, rows) in [(a, &mut arm_a), (b, &mut arm_b)] {
            let run = run_experiment(&cfg.clone().with_seed(seed), &data)?;
            rows.push((seed, run.top1_error, run.calibration.ece));
        }
    }
    Ok(Comparison { arm_a, arm_b })
}

pub fn cmd_compare(config_a: &Path, config_b: &Path, seeds: usize, base_seed: Option<u64>) -> Result<String> {
    let (a, _) = ExperimentConfig::load(config_a)?;
    let (b, _) = ExperimentConfig::load(config_b)?;
    let base = base_seed.unwrap_or(a.train.seed);
    Ok(compare_configs(&a, &b, seeds, base)?.to_csv())
}

/// Process exit code for an error: 2 for configuration problems, 3 for
/// runtime and numeric failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        _ => 3,
    }
}
