//! Exact-weight convolutional networks that synthesize truncated Fourier series,
//! the periodized Fourier-coefficient operator feeding them, and the training /
//! data-generation pipeline used to study how such architectures scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`convnet`]: 1D (transposed) convolutions, dense layers, reshape nodes and
//!   validated layer pipelines.
//! * [`complex`]: the `C -> R^4` embedding and the 2x2 real blocks for complex products.
//! * [`spectral`]: constructive builders for the mode-doubling block, single-frequency
//!   synthesis, stacked Fourier synthesis and the real-valued decoder.
//! * [`fourier`]: boundary-corrected periodization, folding, Fourier coefficients,
//!   truncated series and Sobolev norms.
//! * [`train`]: He-initialised leaky-ReLU MLPs with exact gradients, L-BFGS, Adam and
//!   ensemble training against a frozen decoder.
//! * [`problems`]: the analytic benchmark operator, a FitzHugh–Nagumo finite-element
//!   solver and dataset persistence.
//! * [`experiments`]: decay and scaling studies with CSV / SVG / manifest output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod convnet;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod problems;
pub mod spectral;
pub mod train;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64;
