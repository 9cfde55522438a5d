//! Fully connected classifier with manual backpropagation.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::loss::{soft_loss, soft_loss_grad, LossMode};
use crate::rng::RandomSource;
use crate::softening::Confidence;

/// Dense layer computing `W x + b`, with `W` stored row-major as
/// `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b),
        );
    }
}

/// Rectifier MLP: ReLU between layers, identity at the output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    layers: Vec<DenseLayer>,
}

/// Gradients shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpClassifier) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    /// `self += other`, element by element in parameter order.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= factor);
            l.bias.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Flattened in checkpoint order: per layer, weights then bias.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[DenseLayer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.bias);
    }
    out
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::precondition(
            "an MLP needs at least input and output sizes",
        ));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::precondition("layer sizes must be positive"));
    }
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"SOFTAUG\0";
const CHECKPOINT_VERSION: u32 = 1;

impl MlpClassifier {
    /// Fan-in scaled uniform initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases.
    pub fn new(layer_sizes: &[usize], rng: &mut RandomSource) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes)?;
        for layer in &mut model.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.uniform_range(-bound, bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layers: layer_sizes
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        })
    }

    /// Builds a model from explicit layers; consecutive dimensions must agree.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::precondition("model needs at least one layer"));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::precondition(
                    "layer parameter lengths do not match its shape",
                ));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::precondition(format!(
                    "layer dimension mismatch: {} outputs feed {} inputs",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    fn param_slot(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param(&mut self, index: usize) -> f64 {
        *self.param_slot(index)
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        *self.param_slot(index) = value;
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::domain(format!(
                "input has {} values, model expects {}",
                input.len(),
                self.input_size()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i != last {
                next.iter_mut().for_each(|z| *z = z.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_image(&self, image: &ImageBuffer) -> Result<Vec<f64>> {
        self.forward(image.pixels())
    }

    /// Accumulates `scale * d(loss)/d(params)` for one sample into `grads`
    /// and returns the sample's logits and unscaled loss. If the forward pass
    /// overflows, nothing is accumulated and the loss is infinite.
    pub fn accumulate_gradients(
        &self,
        input: &[f64],
        true_class: usize,
        confidence: Confidence,
        mode: LossMode,
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<(Vec<f64>, f64)> {
        self.check_input(input)?;
        // Post-activation inputs to each layer.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut cur = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&cur, &mut z);
            if i != last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(std::mem::replace(&mut cur, z));
        }
        let logits = cur;
        if logits.iter().any(|z| !z.is_finite()) {
            return Ok((logits, f64::INFINITY));
        }
        let loss = soft_loss(&logits, true_class, confidence, mode)?;
        let mut delta: Vec<f64> = soft_loss_grad(&logits, true_class, confidence, mode)?
            .into_iter()
            .map(|g| g * scale)
            .collect();

        for (i, layer) in self.layers.iter().enumerate().rev() {
            let a = &acts[i];
            let g = &mut grads.layers[i];
            for ((row, gb), &d) in g
                .weights
                .chunks_exact_mut(layer.inputs)
                .zip(&mut g.bias)
                .zip(&delta)
            {
                *gb += d;
                if d != 0.0 {
                    row.iter_mut().zip(a).for_each(|(gw, x)| *gw += d * x);
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                    if d != 0.0 {
                        prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                    }
                }
                // ReLU derivative: the stored activation is zero where the unit is off.
                prev.iter_mut().zip(a).for_each(|(p, x)| {
                    if *x <= 0.0 {
                        *p = 0.0;
                    }
                });
                delta = prev;
            }
        }
        Ok((logits, loss))
    }

    /// Loss and parameter gradients for a single sample.
    pub fn backward(
        &self,
        image: &ImageBuffer,
        true_class: usize,
        confidence: Confidence,
        mode: LossMode,
    ) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(self);
        let (_, loss) =
            self.accumulate_gradients(image.pixels(), true_class, confidence, mode, 1.0, &mut grads)?;
        Ok((loss, grads))
    }

    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let sizes = self.layer_sizes();
        out.write_all(&(sizes.len() as u32).to_le_bytes())?;
        for s in &sizes {
            out.write_all(&(*s as u64).to_le_bytes())?;
        }
        for x in self.flatten() {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::Checkpoint("truncated header".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let version = read_u32(&mut input)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut input)? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::Checkpoint(format!("implausible layer count {n}")));
        }
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let mut buf = [0u8; 8];
            input
                .read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint("truncated layer sizes".into()))?;
            sizes.push(u64::from_le_bytes(buf) as usize);
        }
        let mut model = Self::zeros(&sizes).map_err(|e| Error::Checkpoint(e.to_string()))?;
        for layer in &mut model.layers {
            for x in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                let mut buf = [0u8; 8];
                input
                    .read_exact(&mut buf)
                    .map_err(|_| Error::Checkpoint("truncated parameter data".into()))?;
                *x = f64::from_le_bytes(buf);
            }
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::Checkpoint("trailing bytes after parameters".into()));
        }
        Ok(model)
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    Ok(u32::from_le_bytes(buf))
}
