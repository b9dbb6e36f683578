//! Exact-weight Fourier-synthesis networks.

mod builder;
mod grid;

pub use builder::{
    build_f_omega, build_phi_z, build_psi, build_s_m, derive_permutation, SpectralKind,
    SpectralNet, BLOCK_CONV_LAYERS,
};
pub use grid::DyadicGrid;
