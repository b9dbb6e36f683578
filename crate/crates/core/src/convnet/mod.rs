//! Layer semantics and forward evaluation of layer pipelines.

mod conv;
mod graph;
mod tensor;

pub use conv::{
    conv_forward, conv_output_length, conv_transpose_forward, dense_forward, Activation, ConvSpec,
    DenseLayer, LayerWeights,
};
pub use graph::{materialize_linear_map, Layer, NetworkGraph};
pub use tensor::{Shape, Tensor2};
