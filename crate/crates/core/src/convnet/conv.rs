//! 1D (transposed) convolution and dense layers.
//!
//! Layout conventions:
//!
//! * input / output tensors: `[channels, length]`, channel-major
//! * convolution weights: `[out_channels, in_channels / groups, kernel]`
//! * transposed-convolution weights: `[in_channels, out_channels / groups, kernel]`
//! * bias: one value per output channel, or absent
//!
//! Output channel `k'` of a grouped layer belongs to group `k' / (out_channels / groups)`
//! and only sees the input channels of that group.

use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Componentwise activation applied after the affine part of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    /// Default slope for the leaky variant.
    pub const LEAKY_SLOPE: f64 = 0.01;

    pub fn leaky() -> Self {
        Activation::LeakyRelu(Self::LEAKY_SLOPE)
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(slope) => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    /// Derivative at `x`; at the kink the positive-side slope is used.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Activation::Identity)
    }
}

/// Hyperparameters of a (transposed) 1D convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub groups: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub dilation: usize,
    pub transposed: bool,
    pub activation: Activation,
}

impl ConvSpec {
    /// Ungrouped, unit stride and dilation, identity activation.
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            groups: 1,
            kernel_size,
            stride: 1,
            dilation: 1,
            transposed: false,
            activation: Activation::Identity,
        }
    }

    pub fn transposed(mut self) -> Self {
        self.transposed = true;
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        if self.kernel_size == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(Error::Config("kernel size, stride and dilation must be >= 1".into()));
        }
        if self.groups == 0
            || self.in_channels % self.groups != 0
            || self.out_channels % self.groups != 0
        {
            return Err(Error::Config(format!(
                "groups {} must divide in_channels {} and out_channels {}",
                self.groups, self.in_channels, self.out_channels
            )));
        }
        Ok(())
    }

    pub fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    pub fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }

    /// Expected number of weight entries.
    pub fn weight_len(&self) -> usize {
        if self.transposed {
            self.in_channels * self.out_per_group() * self.kernel_size
        } else {
            self.out_channels * self.in_per_group() * self.kernel_size
        }
    }

    /// Span of one dilated kernel window, `d(s-1)+1`.
    pub fn receptive_field(&self) -> usize {
        self.dilation * (self.kernel_size - 1) + 1
    }
}

/// Output length of a (transposed) convolution on an input of length `n`.
///
/// Forward: `floor((n - d(s-1) - 1)/t) + 1`. Transposed: `(n-1)t + d(s-1) + 1`.
pub fn conv_output_length(n: usize, spec: &ConvSpec) -> Result<usize> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Shape("input length must be positive".into()));
    }
    if spec.transposed {
        return Ok((n - 1) * spec.stride + spec.receptive_field());
    }
    let field = spec.receptive_field();
    if n < field {
        return Err(Error::Shape(format!(
            "input length {n} shorter than receptive field {field}"
        )));
    }
    Ok((n - field) / spec.stride + 1)
}

/// Weights and optional bias of a convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl LayerWeights {
    pub fn new(weight: Vec<f64>, bias: Option<Vec<f64>>) -> Self {
        Self { weight, bias }
    }

    pub fn no_bias(weight: Vec<f64>) -> Self {
        Self { weight, bias: None }
    }

    pub fn check(&self, spec: &ConvSpec) -> Result<()> {
        spec.validate()?;
        if self.weight.len() != spec.weight_len() {
            return Err(Error::Shape(format!(
                "weight tensor has {} entries, spec requires {}",
                self.weight.len(),
                spec.weight_len()
            )));
        }
        if let Some(b) = &self.bias {
            if b.len() != spec.out_channels {
                return Err(Error::Shape(format!(
                    "bias has {} entries for {} output channels",
                    b.len(),
                    spec.out_channels
                )));
            }
        }
        Ok(())
    }
}

fn check_input(x: &Tensor2, spec: &ConvSpec, w: &LayerWeights) -> Result<()> {
    w.check(spec)?;
    if x.channels() != spec.in_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, layer expects {}",
            x.channels(),
            spec.in_channels
        )));
    }
    Ok(())
}

fn finish(mut out: Tensor2, spec: &ConvSpec, w: &LayerWeights) -> Tensor2 {
    let len = out.length();
    if w.bias.is_none() && spec.activation.is_linear() {
        return out;
    }
    for co in 0..spec.out_channels {
        let b = w.bias.as_ref().map_or(0.0, |b| b[co]);
        for j in 0..len {
            let v = out.get(co, j) + b;
            out.set(co, j, spec.activation.apply(v));
        }
    }
    out
}

/// Strided, dilated, grouped cross-correlation.
pub fn conv_forward(x: &Tensor2, spec: &ConvSpec, w: &LayerWeights) -> Result<Tensor2> {
    if spec.transposed {
        return Err(Error::Config("conv_forward called with a transposed spec".into()));
    }
    check_input(x, spec, w)?;
    let n = x.length();
    let out_len = conv_output_length(n, spec)?;
    let (ipg, opg, s) = (spec.in_per_group(), spec.out_per_group(), spec.kernel_size);
    let mut out = Tensor2::zeros(spec.out_channels, out_len);
    for co in 0..spec.out_channels {
        let group = co / opg;
        for ci_local in 0..ipg {
            let ci = group * ipg + ci_local;
            let input = x.channel(ci);
            let kernel = &w.weight[(co * ipg + ci_local) * s..(co * ipg + ci_local + 1) * s];
            for (i, &wi) in kernel.iter().enumerate() {
                if wi == 0.0 {
                    continue;
                }
                let offset = i * spec.dilation;
                for j in 0..out_len {
                    let v = out.get(co, j) + wi * input[j * spec.stride + offset];
                    out.set(co, j, v);
                }
            }
        }
    }
    Ok(finish(out, spec, w))
}

/// Transposed cross-correlation: input position `i` scatters `w[l] * x[i]`
/// to output position `i*t + l*d`.
pub fn conv_transpose_forward(x: &Tensor2, spec: &ConvSpec, w: &LayerWeights) -> Result<Tensor2> {
    if !spec.transposed {
        return Err(Error::Config("conv_transpose_forward called with a forward spec".into()));
    }
    check_input(x, spec, w)?;
    let n = x.length();
    let out_len = conv_output_length(n, spec)?;
    let (ipg, opg, s) = (spec.in_per_group(), spec.out_per_group(), spec.kernel_size);
    let mut out = Tensor2::zeros(spec.out_channels, out_len);
    for ci in 0..spec.in_channels {
        let group = ci / ipg;
        let input = x.channel(ci);
        for co_local in 0..opg {
            let co = group * opg + co_local;
            let kernel = &w.weight[(ci * opg + co_local) * s..(ci * opg + co_local + 1) * s];
            for (l, &wl) in kernel.iter().enumerate() {
                if wl == 0.0 {
                    continue;
                }
                let offset = l * spec.dilation;
                for (i, &xi) in input.iter().enumerate() {
                    let j = i * spec.stride + offset;
                    let v = out.get(co, j) + wl * xi;
                    out.set(co, j, v);
                }
            }
        }
    }
    Ok(finish(out, spec, w))
}

/// Fully connected layer, `weight` row-major `[out_dim, in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weight: Vec<f64>,
        bias: Option<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self> {
        if weight.len() != in_dim * out_dim {
            return Err(Error::Shape(format!(
                "dense weight has {} entries, expected {out_dim}x{in_dim}",
                weight.len()
            )));
        }
        if bias.as_ref().is_some_and(|b| b.len() != out_dim) {
            return Err(Error::Shape("dense bias length differs from out_dim".into()));
        }
        Ok(Self { in_dim, out_dim, weight, bias, activation })
    }
}

/// `activation(W x + b)`.
pub fn dense_forward(x: &[f64], layer: &DenseLayer) -> Result<Vec<f64>> {
    if x.len() != layer.in_dim {
        return Err(Error::Shape(format!(
            "dense input has {} entries, layer expects {}",
            x.len(),
            layer.in_dim
        )));
    }
    let out = (0..layer.out_dim)
        .map(|r| {
            let row = &layer.weight[r * layer.in_dim..(r + 1) * layer.in_dim];
            let affine = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                + layer.bias.as_ref().map_or(0.0, |b| b[r]);
            layer.activation.apply(affine)
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn output_length_formulas() {
        let s = ConvSpec::new(1, 1, 2).with_stride(2);
        assert_eq!(conv_output_length(10, &s).unwrap(), 5);
        let s = ConvSpec::new(1, 1, 3).with_dilation(2);
        assert_eq!(conv_output_length(7, &s).unwrap(), 3);
        // the upsampling layer doubles the length
        let s = ConvSpec::new(1, 1, 2).with_stride(2).transposed();
        assert_eq!(conv_output_length(3, &s).unwrap(), 6);
    }

    #[test]
    fn output_length_rejects_short_input() {
        let s = ConvSpec::new(1, 1, 3).with_dilation(2);
        assert!(conv_output_length(4, &s).is_err());
        assert!(conv_output_length(0, &s.transposed()).is_err());
    }

    #[test]
    fn two_tap_kernel_by_hand() {
        let x = Tensor2::row(vec![1.0, 1.0, 1.0]);
        let spec = ConvSpec::new(1, 1, 2);
        let y = conv_forward(&x, &spec, &LayerWeights::no_bias(vec![1.0, 2.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 3.0]);
    }

    #[test]
    fn unit_kernels_are_identities() {
        let x = Tensor2::row(vec![0.5, -2.0, 7.25, 1e-3]);
        let w = LayerWeights::no_bias(vec![1.0]);
        let spec = ConvSpec::new(1, 1, 1);
        assert_eq!(conv_forward(&x, &spec, &w).unwrap(), x);
        assert_eq!(conv_transpose_forward(&x, &spec.transposed(), &w).unwrap(), x);
    }

    #[test]
    fn group_divisibility_is_checked() {
        let spec = ConvSpec::new(6, 4, 1).with_groups(4);
        assert!(spec.validate().is_err());
        let x = Tensor2::zeros(6, 3);
        assert!(conv_forward(&x, &spec, &LayerWeights::no_bias(vec![0.0; 6])).is_err());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let spec = ConvSpec::new(2, 1, 1);
        let x = Tensor2::zeros(3, 4);
        let err = conv_forward(&x, &spec, &LayerWeights::no_bias(vec![1.0, 1.0]));
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn bias_and_activation_apply_per_channel() {
        let x = Tensor2::row(vec![1.0, -1.0]);
        let spec = ConvSpec::new(1, 2, 1).with_activation(Activation::Relu);
        let w = LayerWeights::new(vec![1.0, 2.0], Some(vec![0.5, -3.0]));
        let y = conv_forward(&x, &spec, &w).unwrap();
        assert_eq!(y.data(), &[1.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_examples() {
        let eye = DenseLayer::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], None, Activation::Identity)
            .unwrap();
        assert_eq!(dense_forward(&[0.25, -4.0], &eye).unwrap(), vec![0.25, -4.0]);

        let clamp =
            DenseLayer::new(2, 1, vec![1.0, 1.0], Some(vec![-1.0]), Activation::Relu).unwrap();
        assert_eq!(dense_forward(&[0.3, 0.3], &clamp).unwrap(), vec![0.0]);

        assert!(dense_forward(&[1.0], &clamp).is_err());
    }

    #[test]
    fn dense_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (n, m) = (rng.random_range(1..8), rng.random_range(1..8));
            let w: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let layer =
                DenseLayer::new(n, m, w.clone(), Some(b.clone()), Activation::leaky()).unwrap();
            let y = dense_forward(&x, &layer).unwrap();
            for r in 0..m {
                let mut acc = b[r];
                for c in 0..n {
                    acc += w[r * n + c] * x[c];
                }
                let expect = if acc < 0.0 { 0.01 * acc } else { acc };
                assert!((y[r] - expect).abs() <= 1e-14, "{} vs {expect}", y[r]);
            }
        }
    }
}
