use std::fmt::Write as _;
use std::ops::Range;

use super::conv::{
    conv_forward, conv_output_length, conv_transpose_forward, dense_forward, ConvSpec, DenseLayer,
    LayerWeights,
};
use super::tensor::{Shape, Tensor2};
use crate::error::{Error, Result};

/// One node of a [`NetworkGraph`].
///
/// Everything except `Conv` and `Dense` moves data without arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv { spec: ConvSpec, weights: LayerWeights },
    /// Acts on the flattened input; output is `1 x out_dim`.
    Dense(DenseLayer),
    /// Row-major reinterpretation of the buffer.
    Reshape { channels: usize, length: usize },
    /// `C x L -> 1 x (C L)`.
    Flatten,
    /// Independent transposes of `batches` stacked blocks:
    /// `(batches * r) x c -> (batches * c) x r`.
    Transpose { batches: usize },
    /// Keep positions `range` of every channel.
    Truncate(Range<usize>),
    /// Append copies of the listed positions at the end of every channel.
    Append(Vec<usize>),
    /// Output element `i` (flat, row-major) is input element `indices[i]`.
    Gather { shape: Shape, indices: Vec<usize> },
}

impl Layer {
    pub fn conv(spec: ConvSpec, weights: LayerWeights) -> Result<Self> {
        weights.check(&spec)?;
        Ok(Layer::Conv { spec, weights })
    }

    pub fn transpose() -> Self {
        Layer::Transpose { batches: 1 }
    }

    pub fn is_reshape(&self) -> bool {
        !matches!(self, Layer::Conv { .. } | Layer::Dense(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv { spec, .. } if spec.transposed => "conv_transpose",
            Layer::Conv { .. } => "conv",
            Layer::Dense(_) => "dense",
            Layer::Reshape { .. } => "reshape",
            Layer::Flatten => "flatten",
            Layer::Transpose { .. } => "transpose",
            Layer::Truncate(_) => "truncate",
            Layer::Append(_) => "append",
            Layer::Gather { .. } => "gather",
        }
    }

    /// Output shape for a given input shape, or the reason the layer cannot accept it.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match self {
            Layer::Conv { spec, weights } => {
                weights.check(spec)?;
                if input.channels != spec.in_channels {
                    return Err(Error::Shape(format!(
                        "conv expects {} channels, got {input}",
                        spec.in_channels
                    )));
                }
                Ok(Shape::new(spec.out_channels, conv_output_length(input.length, spec)?))
            }
            Layer::Dense(d) => {
                if input.numel() != d.in_dim {
                    return Err(Error::Shape(format!(
                        "dense expects {} inputs, got {input}",
                        d.in_dim
                    )));
                }
                Ok(Shape::new(1, d.out_dim))
            }
            Layer::Reshape { channels, length } => {
                let out = Shape::new(*channels, *length);
                if out.numel() != input.numel() || out.numel() == 0 {
                    return Err(Error::Shape(format!("cannot reshape {input} into {out}")));
                }
                Ok(out)
            }
            Layer::Flatten => Ok(Shape::new(1, input.numel())),
            Layer::Transpose { batches } => {
                if *batches == 0 || input.channels % batches != 0 {
                    return Err(Error::Shape(format!(
                        "{batches} transpose batches do not divide {input}"
                    )));
                }
                let rows = input.channels / batches;
                Ok(Shape::new(batches * input.length, rows))
            }
            Layer::Truncate(r) => {
                if r.start >= r.end || r.end > input.length {
                    return Err(Error::Shape(format!("truncate {r:?} out of bounds for {input}")));
                }
                Ok(Shape::new(input.channels, r.len()))
            }
            Layer::Append(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= input.length) {
                    return Err(Error::Shape(format!("append index {bad} out of bounds for {input}")));
                }
                Ok(Shape::new(input.channels, input.length + idx.len()))
            }
            Layer::Gather { shape, indices } => {
                if indices.len() != shape.numel() || shape.numel() == 0 {
                    return Err(Error::Shape(format!(
                        "gather lists {} indices for output {shape}",
                        indices.len()
                    )));
                }
                if let Some(&bad) = indices.iter().find(|&&i| i >= input.numel()) {
                    return Err(Error::Shape(format!("gather index {bad} out of bounds for {input}")));
                }
                Ok(*shape)
            }
        }
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        let out_shape = self.output_shape(x.shape())?;
        match self {
            Layer::Conv { spec, weights } if spec.transposed => {
                conv_transpose_forward(x, spec, weights)
            }
            Layer::Conv { spec, weights } => conv_forward(x, spec, weights),
            Layer::Dense(d) => Ok(Tensor2::row(dense_forward(x.data(), d)?)),
            Layer::Reshape { .. } | Layer::Flatten => {
                x.clone().reshaped(out_shape.channels, out_shape.length)
            }
            Layer::Transpose { batches } => {
                let rows = x.channels() / batches;
                let cols = x.length();
                let mut out = Vec::with_capacity(x.data().len());
                for b in 0..*batches {
                    for c in 0..cols {
                        out.extend((0..rows).map(|r| x.get(b * rows + r, c)));
                    }
                }
                Tensor2::new(out_shape.channels, out_shape.length, out)
            }
            Layer::Truncate(r) => {
                let out = (0..x.channels())
                    .flat_map(|c| x.channel(c)[r.clone()].iter().copied())
                    .collect();
                Tensor2::new(out_shape.channels, out_shape.length, out)
            }
            Layer::Append(idx) => {
                let mut out = Vec::with_capacity(out_shape.numel());
                for c in 0..x.channels() {
                    let ch = x.channel(c);
                    out.extend_from_slice(ch);
                    out.extend(idx.iter().map(|&i| ch[i]));
                }
                Tensor2::new(out_shape.channels, out_shape.length, out)
            }
            Layer::Gather { indices, .. } => {
                let src = x.data();
                let out = indices.iter().map(|&i| src[i]).collect();
                Tensor2::new(out_shape.channels, out_shape.length, out)
            }
        }
    }

    /// Structurally active parameters: nonzero convolution weights, every dense
    /// weight, and every stored bias entry. Reshape-type layers count zero.
    pub fn active_weights(&self) -> usize {
        match self {
            Layer::Conv { weights, .. } => {
                weights.weight.iter().filter(|w| **w != 0.0).count()
                    + weights.bias.as_ref().map_or(0, Vec::len)
            }
            Layer::Dense(d) => d.weight.len() + d.bias.as_ref().map_or(0, Vec::len),
            _ => 0,
        }
    }

    fn is_linear(&self) -> std::result::Result<(), String> {
        match self {
            Layer::Conv { spec, weights } => {
                if !spec.activation.is_linear() {
                    return Err(format!("{} layer has activation {:?}", self.kind(), spec.activation));
                }
                if weights.bias.is_some() {
                    return Err(format!("{} layer carries a bias", self.kind()));
                }
                Ok(())
            }
            Layer::Dense(d) => {
                if !d.activation.is_linear() {
                    return Err(format!("dense layer has activation {:?}", d.activation));
                }
                if d.bias.is_some() {
                    return Err("dense layer carries a bias".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// An ordered pipeline of layers whose intermediate shapes are checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    input: Shape,
    layers: Vec<Layer>,
    // shapes[i] is the input shape of layer i; the last entry is the output shape
    shapes: Vec<Shape>,
}

impl NetworkGraph {
    /// The empty graph (identity) on `input`.
    pub fn identity(input: Shape) -> Self {
        Self { input, layers: Vec::new(), shapes: vec![input] }
    }

    pub fn new(input: Shape, layers: Vec<Layer>) -> Result<Self> {
        let mut g = Self::identity(input);
        for layer in layers {
            g.push(layer)?;
        }
        Ok(g)
    }

    pub fn push(&mut self, layer: Layer) -> Result<()> {
        let out = layer
            .output_shape(self.output_shape())
            .map_err(|e| Error::Shape(format!("layer {} ({}): {e}", self.layers.len(), layer.kind())))?;
        self.layers.push(layer);
        self.shapes.push(out);
        Ok(())
    }

    /// Sequential composition `other ∘ self`.
    pub fn then(mut self, other: &NetworkGraph) -> Result<Self> {
        if other.input != self.output_shape() {
            return Err(Error::Shape(format!(
                "cannot feed {} into a graph expecting {}",
                self.output_shape(),
                other.input
            )));
        }
        for layer in &other.layers {
            self.push(layer.clone())?;
        }
        Ok(self)
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_shape(&self) -> Shape {
        *self.shapes.last().expect("shape list is never empty")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        if x.shape() != self.input {
            return Err(Error::Shape(format!(
                "graph expects input {}, got {}",
                self.input,
                x.shape()
            )));
        }
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    pub fn count_active_weights(&self) -> usize {
        self.layers.iter().map(Layer::active_weights).sum()
    }

    /// Number of layers that carry parameters (convolutions and dense layers).
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| !l.is_reshape()).count()
    }

    /// Largest input or output channel count over all convolutions.
    pub fn max_channels(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Conv { spec, .. } => Some(spec.in_channels.max(spec.out_channels)),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn max_kernel_size(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Conv { spec, .. } => Some(spec.kernel_size),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.layers.iter().all(|l| l.is_linear().is_ok())
    }

    /// Flat `key=value` description of the architecture (no weights).
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input={}", self.input);
        let _ = writeln!(s, "layers={}", self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let detail = match layer {
                Layer::Conv { spec, .. } => format!(
                    "{} in={} out={} groups={} kernel={} stride={} dilation={} activation={:?}",
                    layer.kind(),
                    spec.in_channels,
                    spec.out_channels,
                    spec.groups,
                    spec.kernel_size,
                    spec.stride,
                    spec.dilation,
                    spec.activation
                ),
                Layer::Dense(d) => format!(
                    "dense in={} out={} bias={} activation={:?}",
                    d.in_dim,
                    d.out_dim,
                    d.bias.is_some(),
                    d.activation
                ),
                other => other.kind().to_string(),
            };
            let _ = writeln!(s, "layer.{i}={detail} -> {}", self.shapes[i + 1]);
        }
        let _ = writeln!(s, "active_weights={}", self.count_active_weights());
        s
    }
}

/// Dense matrix `V` (row-major, `out_numel x in_dim`) with `V e_i = net(e_i)`.
///
/// Rejects graphs containing activations or biases.
pub fn materialize_linear_map(net: &NetworkGraph, in_dim: usize) -> Result<nalgebra::DMatrix<f64>> {
    for layer in net.layers() {
        layer.is_linear().map_err(Error::NotLinear)?;
    }
    let input = net.input_shape();
    if input.numel() != in_dim {
        return Err(Error::Shape(format!("graph input {input} has no {in_dim} entries")));
    }
    let rows = net.output_shape().numel();
    let mut v = nalgebra::DMatrix::zeros(rows, in_dim);
    let mut basis = vec![0.0; in_dim];
    for i in 0..in_dim {
        basis[i] = 1.0;
        let x = Tensor2::new(input.channels, input.length, basis.clone())?;
        let y = net.forward(&x)?;
        for (r, val) in y.data().iter().enumerate() {
            v[(r, i)] = *val;
        }
        basis[i] = 0.0;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convnet::conv::Activation;

    #[test]
    fn empty_graph_is_identity() {
        let g = NetworkGraph::identity(Shape::new(2, 3));
        let x = Tensor2::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(g.forward(&x).unwrap(), x);
        assert_eq!(g.count_active_weights(), 0);
    }

    #[test]
    fn flatten_then_truncate() {
        let g = NetworkGraph::new(Shape::new(2, 3), vec![Layer::Flatten, Layer::Truncate(2..4)])
            .unwrap();
        let x = Tensor2::new(2, 3, vec![10., 11., 12., 13., 14., 15.]).unwrap();
        assert_eq!(g.forward(&x).unwrap().data(), &[12., 13.]);
    }

    #[test]
    fn batched_transpose_and_append() {
        // two 2x2 blocks stacked as 4x2
        let g = NetworkGraph::new(
            Shape::new(4, 2),
            vec![Layer::Transpose { batches: 2 }, Layer::Append(vec![0])],
        )
        .unwrap();
        let x = Tensor2::new(4, 2, vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let y = g.forward(&x).unwrap();
        assert_eq!(y.shape(), Shape::new(4, 3));
        assert_eq!(y.data(), &[1., 3., 1., 2., 4., 2., 5., 7., 5., 6., 8., 6.]);
    }

    #[test]
    fn invalid_pipelines_fail_at_construction() {
        let conv = Layer::conv(ConvSpec::new(3, 1, 1), LayerWeights::no_bias(vec![1.; 3])).unwrap();
        assert!(NetworkGraph::new(Shape::new(2, 4), vec![conv]).is_err());
        assert!(NetworkGraph::new(Shape::new(2, 4), vec![Layer::Truncate(3..5)]).is_err());
        assert!(NetworkGraph::new(Shape::new(2, 4), vec![Layer::Reshape { channels: 3, length: 3 }])
            .is_err());
    }

    #[test]
    fn dense_weight_count_includes_bias() {
        let d = DenseLayer::new(2, 3, vec![0.5; 6], Some(vec![0.0; 3]), Activation::Identity).unwrap();
        let g = NetworkGraph::new(Shape::new(1, 2), vec![Layer::Dense(d)]).unwrap();
        assert_eq!(g.count_active_weights(), 9);
    }

    #[test]
    fn materialize_banded_conv() {
        let conv = Layer::conv(ConvSpec::new(1, 1, 2), LayerWeights::no_bias(vec![1., 1.])).unwrap();
        let g = NetworkGraph::new(Shape::new(1, 3), vec![conv]).unwrap();
        let v = materialize_linear_map(&g, 3).unwrap();
        assert_eq!(v, nalgebra::DMatrix::from_row_slice(2, 3, &[1., 1., 0., 0., 1., 1.]));

        let id = materialize_linear_map(&NetworkGraph::identity(Shape::new(1, 4)), 4).unwrap();
        assert_eq!(id, nalgebra::DMatrix::identity(4, 4));
    }

    #[test]
    fn materialize_rejects_nonlinear() {
        let spec = ConvSpec::new(1, 1, 1).with_activation(Activation::Relu);
        let conv = Layer::conv(spec, LayerWeights::no_bias(vec![1.])).unwrap();
        let g = NetworkGraph::new(Shape::new(1, 3), vec![conv]).unwrap();
        assert!(matches!(materialize_linear_map(&g, 3), Err(Error::NotLinear(_))));
    }
}
