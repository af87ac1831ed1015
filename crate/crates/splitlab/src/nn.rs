//! Dense feed-forward network core.
//!
//! Everything here is pure and deterministic: identical inputs give
//! bit-identical outputs. Parameters live in a flat [`ParamVector`]
//! whose layout is dictated by an [`Arch`]; forward passes record a
//! [`Tape`] that backward passes consume. The only loss is softmax
//! cross-entropy, computed with max-subtraction so saturated logits
//! cannot overflow.

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{from_f64, Scalar};

/// Element-wise non-linearity applied after a layer's affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            // ReLU uses the zero subgradient at z = 0.
            Activation::Relu => {
                if z > S::zero() {
                    z
                } else {
                    S::zero()
                }
            }
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Relu => {
                if z > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Identity => S::one(),
        }
    }
}

/// One dense layer: `fan_out` outputs from `fan_in` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(fan_in: usize, fan_out: usize, activation: Activation) -> Result<Self> {
        if fan_in == 0 || fan_out == 0 {
            return Err(Error::config(format!(
                "layer dimensions must be >= 1, got {fan_in}->{fan_out}"
            )));
        }
        Ok(LayerSpec {
            fan_in,
            fan_out,
            activation,
        })
    }

    /// Number of scalars the layer contributes: weights plus biases.
    #[inline]
    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

/// A validated chain of dense layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arch {
    layers: Vec<LayerSpec>,
}

impl Arch {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("architecture must have at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out != pair[1].fan_in {
                return Err(Error::config(format!(
                    "consecutive layers do not chain: fan_out {} vs fan_in {}",
                    pair[0].fan_out, pair[1].fan_in
                )));
            }
        }
        Ok(Arch { layers })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Concatenates `self` with `next` into one chain.
    pub fn joined(&self, next: &Arch) -> Result<Arch> {
        let mut layers = self.layers.clone();
        layers.extend_from_slice(&next.layers);
        Arch::new(layers)
    }
}

/// Flat parameter storage.
///
/// Layout: for each layer in order, the weight matrix row-major with
/// shape `(fan_out, fan_in)`, then the `fan_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<S> {
    values: Vec<S>,
}

/// Gradients share the parameter layout.
pub type GradVector<S> = ParamVector<S>;

impl<S: Scalar> ParamVector<S> {
    pub fn zeros(arch: &Arch) -> Self {
        ParamVector {
            values: vec![S::zero(); arch.param_count()],
        }
    }

    /// Wraps raw values, checking the length against the architecture.
    pub fn from_values(arch: &Arch, values: Vec<S>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::contract(format!(
                "parameter vector length {} does not match architecture ({} scalars)",
                values.len(),
                arch.param_count()
            )));
        }
        Ok(ParamVector { values })
    }

    /// Builds a vector from explicit per-layer weight/bias blocks.
    /// Weights are row-major `(fan_out, fan_in)`.
    pub fn from_layer_parts(arch: &Arch, parts: &[(Vec<S>, Vec<S>)]) -> Result<Self> {
        if parts.len() != arch.layers().len() {
            return Err(Error::contract("layer part count does not match arch"));
        }
        let mut values = Vec::with_capacity(arch.param_count());
        for (spec, (weights, biases)) in arch.layers().iter().zip(parts) {
            if weights.len() != spec.fan_in * spec.fan_out || biases.len() != spec.fan_out {
                return Err(Error::contract("layer part shape does not match arch"));
            }
            values.extend_from_slice(weights);
            values.extend_from_slice(biases);
        }
        Ok(ParamVector { values })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, &v| acc + v * v)
    }

    /// Concatenation, used to join client-side and AP-side halves.
    pub fn concat(&self, other: &ParamVector<S>) -> ParamVector<S> {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        ParamVector { values }
    }

    /// Splits at `n` scalars into a leading and trailing vector.
    pub fn split_at(&self, n: usize) -> Result<(ParamVector<S>, ParamVector<S>)> {
        if n > self.values.len() {
            return Err(Error::contract("split point beyond parameter length"));
        }
        Ok((
            ParamVector {
                values: self.values[..n].to_vec(),
            },
            ParamVector {
                values: self.values[n..].to_vec(),
            },
        ))
    }

    /// `self += c * other`, used when accumulating batch means.
    pub fn add_scaled(&mut self, other: &ParamVector<S>, c: S) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
    }

    pub fn scale(&mut self, c: S) {
        for v in &mut self.values {
            *v = *v * c;
        }
    }
}

/// One labelled sample: feature vector and class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    pub x: Vec<S>,
    pub y: usize,
}

/// Values recorded by [`forward`] for reuse in [`backward`]: the raw
/// input plus every layer's pre- and post-activation vector.
#[derive(Debug, Clone)]
pub struct Tape<S> {
    input: Vec<S>,
    pre: Vec<Vec<S>>,
    post: Vec<Vec<S>>,
}

impl<S: Scalar> Tape<S> {
    /// The network output (last post-activation values).
    pub fn output(&self) -> &[S] {
        self.post.last().expect("tape has at least one layer")
    }

    /// Pre-activation values recorded for one layer.
    pub fn pre_activations(&self, layer: usize) -> &[S] {
        &self.pre[layer]
    }

    fn layer_input(&self, layer: usize) -> &[S] {
        if layer == 0 {
            &self.input
        } else {
            &self.post[layer - 1]
        }
    }
}

/// Draws initial parameters: weights uniform in
/// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`, biases zero. The draw order is
/// fixed (layers in order, weights row-major), so the same `(arch, seed)`
/// always yields a bit-identical vector.
pub fn init_params<S: Scalar>(arch: &Arch, seed: u64) -> ParamVector<S> {
    let mut rng = rng::stream(seed, rng::TAG_INIT, 0, 0);
    let mut values = Vec::with_capacity(arch.param_count());
    for layer in arch.layers() {
        let limit = 1.0 / (layer.fan_in as f64).sqrt();
        for _ in 0..layer.fan_in * layer.fan_out {
            values.push(from_f64::<S>(rng.random_range(-limit..limit)));
        }
        values.extend(std::iter::repeat_n(S::zero(), layer.fan_out));
    }
    ParamVector { values }
}

fn check_params<S: Scalar>(arch: &Arch, params: &ParamVector<S>) -> Result<()> {
    if params.len() != arch.param_count() {
        return Err(Error::contract(format!(
            "parameter vector length {} does not match architecture ({} scalars)",
            params.len(),
            arch.param_count()
        )));
    }
    Ok(())
}

/// Single-sample forward pass. Returns the output vector and the tape.
pub fn forward<S: Scalar>(
    arch: &Arch,
    params: &ParamVector<S>,
    x: &[S],
) -> Result<(Vec<S>, Tape<S>)> {
    check_params(arch, params)?;
    if x.len() != arch.input_dim() {
        return Err(Error::contract(format!(
            "input dimension {} does not match architecture input {}",
            x.len(),
            arch.input_dim()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("non-finite network input"));
    }

    let mut pre = Vec::with_capacity(arch.layers().len());
    let mut post = Vec::with_capacity(arch.layers().len());
    let mut offset = 0;
    let mut current: &[S] = x;
    for layer in arch.layers() {
        let weights = &params.values[offset..offset + layer.fan_in * layer.fan_out];
        let biases =
            &params.values[offset + layer.fan_in * layer.fan_out..offset + layer.param_count()];
        offset += layer.param_count();

        let mut z = Vec::with_capacity(layer.fan_out);
        for o in 0..layer.fan_out {
            let row = &weights[o * layer.fan_in..(o + 1) * layer.fan_in];
            let mut acc = biases[o];
            for (w, v) in row.iter().zip(current) {
                acc = acc + *w * *v;
            }
            z.push(acc);
        }
        let a: Vec<S> = z.iter().map(|&v| layer.activation.apply(v)).collect();
        pre.push(z);
        post.push(a);
        current = post.last().expect("just pushed");
    }

    let output = post.last().expect("arch nonempty").clone();
    Ok((
        output,
        Tape {
            input: x.to_vec(),
            pre,
            post,
        },
    ))
}

/// Softmax cross-entropy loss and its gradient with respect to the
/// logits: `softmax(logits) - onehot(y)`.
pub fn softmax_cross_entropy<S: Scalar>(logits: &[S], y: usize) -> Result<(S, Vec<S>)> {
    if logits.is_empty() {
        return Err(Error::contract("empty logit vector"));
    }
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("non-finite logits"));
    }
    if y >= logits.len() {
        return Err(Error::data(format!(
            "label {y} out of range for {} classes",
            logits.len()
        )));
    }

    let max = logits
        .iter()
        .fold(logits[0], |m, &v| if v > m { v } else { m });
    let exps: Vec<S> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum = exps.iter().fold(S::zero(), |acc, &e| acc + e);
    let loss = sum.ln() - (logits[y] - max);
    let mut grad: Vec<S> = exps.iter().map(|&e| e / sum).collect();
    grad[y] = grad[y] - S::one();
    Ok((loss, grad))
}

/// Single-sample backward pass from `dloss_doutput` through the taped
/// forward computation. Returns the parameter gradient and the gradient
/// with respect to the network input (the cut-layer gradient when the
/// network is the AP half of a split).
pub fn backward<S: Scalar>(
    arch: &Arch,
    params: &ParamVector<S>,
    tape: &Tape<S>,
    dloss_doutput: &[S],
) -> Result<(GradVector<S>, Vec<S>)> {
    check_params(arch, params)?;
    if tape.pre.len() != arch.layers().len() || tape.input.len() != arch.input_dim() {
        return Err(Error::contract("tape does not match architecture"));
    }
    for (layer, z) in arch.layers().iter().zip(&tape.pre) {
        if z.len() != layer.fan_out {
            return Err(Error::contract("tape does not match architecture"));
        }
    }
    if dloss_doutput.len() != arch.output_dim() {
        return Err(Error::contract(format!(
            "output gradient dimension {} does not match architecture output {}",
            dloss_doutput.len(),
            arch.output_dim()
        )));
    }

    let mut grad = vec![S::zero(); arch.param_count()];
    let layer_offsets: Vec<usize> = arch
        .layers()
        .iter()
        .scan(0usize, |acc, l| {
            let start = *acc;
            *acc += l.param_count();
            Some(start)
        })
        .collect();

    let mut dpost = dloss_doutput.to_vec();
    for (l, layer) in arch.layers().iter().enumerate().rev() {
        let offset = layer_offsets[l];
        let weights = &params.values[offset..offset + layer.fan_in * layer.fan_out];
        let input = tape.layer_input(l);

        let dz: Vec<S> = dpost
            .iter()
            .zip(&tape.pre[l])
            .map(|(&d, &z)| d * layer.activation.derivative(z))
            .collect();

        let mut dinput = vec![S::zero(); layer.fan_in];
        for o in 0..layer.fan_out {
            let row = &weights[o * layer.fan_in..(o + 1) * layer.fan_in];
            let g = dz[o];
            let wgrad = &mut grad[offset + o * layer.fan_in..offset + (o + 1) * layer.fan_in];
            for i in 0..layer.fan_in {
                wgrad[i] = g * input[i];
                dinput[i] = dinput[i] + row[i] * g;
            }
            grad[offset + layer.fan_in * layer.fan_out + o] = g;
        }
        dpost = dinput;
    }

    Ok((GradVector { values: grad }, dpost))
}

/// One plain SGD step: `p <- p - lr * g`, returning the new vector.
/// The learning rate must be finite and non-negative (zero is the
/// protocol-level fixed-point case).
pub fn sgd_step<S: Scalar>(
    params: &ParamVector<S>,
    grad: &GradVector<S>,
    lr: S,
) -> Result<ParamVector<S>> {
    if params.len() != grad.len() {
        return Err(Error::contract(format!(
            "parameter/gradient length mismatch: {} vs {}",
            params.len(),
            grad.len()
        )));
    }
    if !lr.is_finite() || lr < S::zero() {
        return Err(Error::config("learning rate must be finite and >= 0"));
    }
    if !grad.is_finite() {
        return Err(Error::numeric("non-finite gradient in sgd_step"));
    }
    let values = params
        .values
        .iter()
        .zip(&grad.values)
        .map(|(&p, &g)| p - lr * g)
        .collect();
    Ok(ParamVector { values })
}

/// Central-difference gradient of an arbitrary scalar function of the
/// parameters: `(f(p + h e_i) - f(p - h e_i)) / 2h` per coordinate.
/// Test oracle; deliberately independent of [`backward`].
pub fn finite_diff_grad<S: Scalar, F>(
    mut f: F,
    params: &ParamVector<S>,
    h: S,
) -> GradVector<S>
where
    F: FnMut(&ParamVector<S>) -> S,
{
    assert!(h > S::zero(), "finite-difference step must be positive");
    let two = from_f64::<S>(2.0);
    let mut probe = params.clone();
    let mut values = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe.values[i];
        probe.values[i] = orig + h;
        let plus = f(&probe);
        probe.values[i] = orig - h;
        let minus = f(&probe);
        probe.values[i] = orig;
        values.push((plus - minus) / (two * h));
    }
    GradVector { values }
}
