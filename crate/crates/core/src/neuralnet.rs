//! One-hidden-layer sigmoid networks trained by per-example gradient descent.
//!
//! Weights are row-major `(out, in)`. All arithmetic is `f64` and every
//! operation runs in a fixed order, so identical seeds and example streams
//! give bit-identical parameters.

use std::fmt::Write as _;

use rand::Rng;

use crate::bitlang::write_bits;
use crate::error::{IlmError, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 5.0;
pub const DEFAULT_EPOCHS: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Training objective, averaged over output units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    /// Mean squared error.
    #[default]
    Mse,
    /// Binary cross-entropy on the sigmoid outputs.
    Bce,
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Mse => "mse",
            Loss::Bce => "bce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mse" => Some(Loss::Mse),
            "bce" => Some(Loss::Bce),
            _ => None,
        }
    }

    pub fn value(&self, output: &[f64], target: &[f64]) -> f64 {
        let n = output.len() as f64;
        match self {
            Loss::Mse => {
                output
                    .iter()
                    .zip(target)
                    .map(|(y, t)| (y - t) * (y - t))
                    .sum::<f64>()
                    / n
            }
            Loss::Bce => {
                -output
                    .iter()
                    .zip(target)
                    .map(|(&y, &t)| {
                        t * (y + f64::EPSILON).ln() + (1.0 - t) * (1.0 - y + f64::EPSILON).ln()
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }

    /// dL/dz for a sigmoid output unit with pre-activation z.
    #[inline]
    fn output_delta(&self, y: f64, t: f64, n: f64) -> f64 {
        match self {
            Loss::Mse => 2.0 * (y - t) / n * y * (1.0 - y),
            Loss::Bce => (y - t) / n,
        }
    }
}

/// Hyperparameters for one pupil's training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Autoencoder presentations per supervised iteration.
    pub r: usize,
    pub binarize_threshold: f64,
    pub loss: Loss,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            r: 15,
            binarize_threshold: DEFAULT_THRESHOLD,
            loss: Loss::Mse,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(IlmError::LearningRate(self.learning_rate));
        }
        if self.epochs == 0 {
            return Err(IlmError::Config("epochs must be positive".into()));
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return Err(IlmError::Config(format!(
                "binarize threshold {} outside (0, 1)",
                self.binarize_threshold
            )));
        }
        Ok(())
    }
}

/// Feedforward network `in -> hidden -> out` with sigmoid hidden and output layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: [usize; 3],
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Activations retained from a forward pass for backpropagation.
#[derive(Debug, Clone)]
struct Trace {
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: [usize; 3], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let [n_in, n_hidden, n_out] = dims;
        glorot_fill(&mut net.w1, n_in, n_hidden, rng);
        glorot_fill(&mut net.w2, n_hidden, n_out, rng);
        Ok(net)
    }

    pub fn zeros(dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(IlmError::ZeroDimension(dims));
        }
        let [n_in, n_hidden, n_out] = dims;
        Ok(Self {
            dims,
            w1: vec![0.0; n_hidden * n_in],
            b1: vec![0.0; n_hidden],
            w2: vec![0.0; n_out * n_hidden],
            b2: vec![0.0; n_out],
        })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    #[inline]
    pub fn output_len(&self) -> usize {
        self.dims[2]
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Flat parameter vector in layer order: W1, b1, W2, b2.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(IlmError::shape(self.num_params(), params.len()));
        }
        let mut rest = params;
        for layer in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(layer.len());
            layer.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .iter()
            .all(|layer| layer.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.dims[0] {
            return Err(IlmError::shape(
                format!("input of length {}", self.dims[0]),
                input.len(),
            ));
        }
        Ok(())
    }

    fn check_target(&self, target: &[f64]) -> Result<()> {
        if target.len() != self.dims[2] {
            return Err(IlmError::shape(
                format!("target of length {}", self.dims[2]),
                target.len(),
            ));
        }
        Ok(())
    }

    #[inline]
    fn layer(weights: &[f64], bias: &[f64], input: &[f64], out: &mut [f64]) {
        let n_in = input.len();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &weights[k * n_in..(k + 1) * n_in];
            let z = row.iter().zip(input).fold(bias[k], |acc, (w, x)| acc + w * x);
            *o = sigmoid(z);
        }
    }

    #[inline]
    fn forward_into(&self, input: &[f64], hidden: &mut [f64], output: &mut [f64]) {
        Self::layer(&self.w1, &self.b1, input, hidden);
        Self::layer(&self.w2, &self.b2, hidden, output);
    }

    fn trace(&self, input: &[f64]) -> Trace {
        let mut hidden = vec![0.0; self.dims[1]];
        let mut output = vec![0.0; self.dims[2]];
        self.forward_into(input, &mut hidden, &mut output);
        Trace { hidden, output }
    }

    pub fn forward_real(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.trace(input).output)
    }

    /// Forward pass followed by thresholding; an output equal to the threshold maps to 1.
    pub fn forward_binary(&self, input: &[f64], threshold: f64) -> Result<Vec<bool>> {
        Ok(self
            .forward_real(input)?
            .into_iter()
            .map(|y| y >= threshold)
            .collect())
    }

    pub fn loss(&self, input: &[f64], target: &[f64], loss: Loss) -> Result<f64> {
        self.check_target(target)?;
        Ok(loss.value(&self.forward_real(input)?, target))
    }

    /// Loss and gradient (as an `Mlp`-shaped value) for one example.
    pub fn gradient(&self, input: &[f64], target: &[f64], loss: Loss) -> Result<(f64, Mlp)> {
        self.check_input(input)?;
        self.check_target(target)?;
        let trace = self.trace(input);
        let value = loss.value(&trace.output, target);
        let n = self.dims[2] as f64;
        let delta_out: Vec<f64> = trace
            .output
            .iter()
            .zip(target)
            .map(|(&y, &t)| loss.output_delta(y, t, n))
            .collect();
        let mut grad = Mlp::zeros(self.dims)?;
        self.backward(input, &trace.hidden, &delta_out, &mut grad, None);
        Ok((value, grad))
    }

    /// Accumulates parameter gradients given dL/dz at the output layer.
    /// When `delta_in` is given it receives dL/dx for the input vector.
    fn backward(
        &self,
        input: &[f64],
        hidden: &[f64],
        delta_out: &[f64],
        grad: &mut Mlp,
        delta_in: Option<&mut [f64]>,
    ) {
        let [n_in, n_hidden, _] = self.dims;
        let mut delta_hidden = vec![0.0; n_hidden];
        for (k, &d) in delta_out.iter().enumerate() {
            grad.b2[k] += d;
            let row = k * n_hidden;
            for h in 0..n_hidden {
                grad.w2[row + h] += d * hidden[h];
                delta_hidden[h] += self.w2[row + h] * d;
            }
        }
        for (h, dh) in delta_hidden.iter_mut().enumerate() {
            *dh *= hidden[h] * (1.0 - hidden[h]);
        }
        for (h, &d) in delta_hidden.iter().enumerate() {
            grad.b1[h] += d;
            let row = h * n_in;
            for i in 0..n_in {
                grad.w1[row + i] += d * input[i];
            }
        }
        if let Some(delta_in) = delta_in {
            delta_in.iter_mut().for_each(|v| *v = 0.0);
            for (h, &d) in delta_hidden.iter().enumerate() {
                let row = h * n_in;
                for i in 0..n_in {
                    delta_in[i] += self.w1[row + i] * d;
                }
            }
        }
    }

    fn apply(&mut self, grad: &Mlp, eta: f64) {
        for (p, g) in [
            (&mut self.w1, &grad.w1),
            (&mut self.b1, &grad.b1),
            (&mut self.w2, &grad.w2),
            (&mut self.b2, &grad.b2),
        ] {
            for (pv, gv) in p.iter_mut().zip(g.iter()) {
                *pv -= eta * gv;
            }
        }
    }

    /// One gradient-descent step on a single example. Returns the loss before the update.
    pub fn sgd_step(&mut self, input: &[f64], target: &[f64], eta: f64, loss: Loss) -> Result<f64> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(IlmError::LearningRate(eta));
        }
        let (value, grad) = self.gradient(input, target, loss)?;
        if !value.is_finite() {
            return Err(IlmError::NonFiniteLoss);
        }
        self.apply(&grad, eta);
        Ok(value)
    }

    /// `dims=<in>,<hidden>,<out>` followed by one parameter per line.
    pub fn to_checkpoint(&self) -> String {
        let [a, b, c] = self.dims;
        let mut out = format!("dims={a},{b},{c}\n");
        for v in self.params() {
            let _ = writeln!(out, "{v:e}");
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("dims="))
            .ok_or_else(|| IlmError::Parse("missing dims header".into()))?;
        let dims: Vec<usize> = header
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| IlmError::Parse(e.to_string()))?;
        let dims: [usize; 3] = dims
            .try_into()
            .map_err(|_| IlmError::Parse("dims needs three sizes".into()))?;
        let params: Vec<f64> = lines
            .map(|l| l.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| IlmError::Parse(e.to_string()))?;
        let mut net = Mlp::zeros(dims)?;
        net.set_params(&params)?;
        Ok(net)
    }
}

fn glorot_fill<R: Rng + ?Sized>(w: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in w.iter_mut() {
        *v = rng.gen_range(-bound..=bound);
    }
}

/// Encoder `n1 x n2 x n3` and decoder `n3 x n2 x n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Agent {
    /// Encoder is initialised before the decoder from the same stream.
    pub fn new<R: Rng + ?Sized>(n1: usize, n2: usize, n3: usize, rng: &mut R) -> Result<Self> {
        let encoder = Mlp::init([n1, n2, n3], rng)?;
        let decoder = Mlp::init([n3, n2, n1], rng)?;
        Ok(Self { encoder, decoder })
    }

    pub fn from_parts(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        let [e_in, _, e_out] = encoder.dims();
        let [d_in, _, d_out] = decoder.dims();
        if e_out != d_in || e_in != d_out {
            return Err(IlmError::shape(
                format!("decoder {e_out}x_x{e_in}"),
                format!("{d_in}x_x{d_out}"),
            ));
        }
        Ok(Self { encoder, decoder })
    }

    pub fn meaning_len(&self) -> usize {
        self.encoder.input_len()
    }

    pub fn signal_len(&self) -> usize {
        self.encoder.output_len()
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.is_finite() && self.decoder.is_finite()
    }

    /// Composite `decoder(encoder(m))` with no binarization on the signal layer.
    pub fn autoencode(&self, meaning: &[f64]) -> Result<Vec<f64>> {
        let signal = self.encoder.forward_real(meaning)?;
        self.decoder.forward_real(&signal)
    }

    pub fn autoencoder_loss(&self, meaning: &[f64], loss: Loss) -> Result<f64> {
        Ok(loss.value(&self.autoencode(meaning)?, meaning))
    }

    /// Loss and gradients of the meaning -> signal -> meaning reconstruction
    /// with respect to encoder and decoder parameters.
    pub fn autoencoder_gradient(&self, meaning: &[f64], loss: Loss) -> Result<(f64, Mlp, Mlp)> {
        self.encoder.check_input(meaning)?;
        let enc = self.encoder.trace(meaning);
        let dec = self.decoder.trace(&enc.output);
        let value = loss.value(&dec.output, meaning);
        let n = meaning.len() as f64;
        let delta_out: Vec<f64> = dec
            .output
            .iter()
            .zip(meaning)
            .map(|(&y, &t)| loss.output_delta(y, t, n))
            .collect();
        let mut dec_grad = Mlp::zeros(self.decoder.dims)?;
        let mut d_signal = vec![0.0; enc.output.len()];
        self.decoder
            .backward(&enc.output, &dec.hidden, &delta_out, &mut dec_grad, Some(&mut d_signal));
        // signal layer is a sigmoid output of the encoder
        for (d, &s) in d_signal.iter_mut().zip(&enc.output) {
            *d *= s * (1.0 - s);
        }
        let mut enc_grad = Mlp::zeros(self.encoder.dims)?;
        self.encoder
            .backward(meaning, &enc.hidden, &d_signal, &mut enc_grad, None);
        Ok((value, enc_grad, dec_grad))
    }

    /// One step on the composite autoencoder, updating both networks.
    pub fn autoencoder_step(&mut self, meaning: &[f64], eta: f64, loss: Loss) -> Result<f64> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(IlmError::LearningRate(eta));
        }
        let (value, enc_grad, dec_grad) = self.autoencoder_gradient(meaning, loss)?;
        if !value.is_finite() {
            return Err(IlmError::NonFiniteLoss);
        }
        self.encoder.apply(&enc_grad, eta);
        self.decoder.apply(&dec_grad, eta);
        Ok(value)
    }
}

/// Reusable buffers for mapping every meaning through an encoder.
pub(crate) struct Encoding<'a> {
    net: &'a Mlp,
    input: Vec<f64>,
    hidden: Vec<f64>,
    output: Vec<f64>,
    threshold: f64,
}

impl<'a> Encoding<'a> {
    pub(crate) fn new(net: &'a Mlp, threshold: f64) -> Self {
        let [a, b, c] = net.dims();
        Self {
            net,
            input: vec![0.0; a],
            hidden: vec![0.0; b],
            output: vec![0.0; c],
            threshold,
        }
    }

    #[inline]
    pub(crate) fn encode(&mut self, value: u32) -> u32 {
        write_bits(value, &mut self.input);
        self.net
            .forward_into(&self.input, &mut self.hidden, &mut self.output);
        self.output
            .iter()
            .enumerate()
            .fold(0u32, |acc, (j, &y)| acc | (((y >= self.threshold) as u32) << j))
    }
}
