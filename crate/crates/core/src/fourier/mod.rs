//! Periodization, folding, Fourier coefficients and Sobolev norms.

mod coeffs;
mod hermite;
pub mod quadrature;
mod signal;

pub use coeffs::{
    default_panels, fourier_coeffs, hs_norm, hs_norm_at, operator_t, truncated_series_eval,
    FourierCoeffs, COEFF_TOL, NORM_TOL,
};
pub use hermite::{fold, hermite_basis, periodize, HermiteBasis, MAX_SMOOTHNESS};
pub use signal::{Func, SobolevSignal, FD_STEP};
