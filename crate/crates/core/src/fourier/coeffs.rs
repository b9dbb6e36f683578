use num_complex::Complex64;

use super::hermite::{fold, hermite_basis};
use super::quadrature::QuadRule;
use super::signal::SobolevSignal;
use crate::error::{Error, Result};

/// Default absolute tolerance for coefficient quadrature.
pub const COEFF_TOL: f64 = 1e-9;
/// Default relative tolerance for Sobolev norms.
pub const NORM_TOL: f64 = 1e-6;

/// Coefficients `[z_{-m}, .., z_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    m: usize,
    z: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.len() % 2 == 0 {
            return Err(Error::Shape(format!("{} coefficients is not of the form 2m+1", z.len())));
        }
        Ok(Self { m: z.len() / 2, z })
    }

    pub fn zeros(m: usize) -> Self {
        Self { m, z: vec![Complex64::new(0.0, 0.0); 2 * m + 1] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.z
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.z
    }

    /// Coefficient of mode `q`, `|q| <= m`.
    pub fn get(&self, q: i64) -> Complex64 {
        self.z[(q + self.m as i64) as usize]
    }

    pub fn set(&mut self, q: i64, value: Complex64) {
        self.z[(q + self.m as i64) as usize] = value;
    }

    /// Largest `|z_{-q} - conj(z_q)|`; zero for real signals.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (1..=self.m as i64)
            .map(|q| (self.get(-q) - self.get(q).conj()).norm())
            .fold(self.get(0).im.abs(), f64::max)
    }
}

/// Default panel count: `2 max(64, 8m)`.
pub fn default_panels(m: usize) -> usize {
    2 * 64usize.max(8 * m)
}

fn coeffs_with_rule(g: &SobolevSignal, m: usize, rule: &QuadRule) -> Vec<Complex64> {
    let mut z = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let fw = w * g.eval(*x);
        let step = Complex64::from_polar(1.0, -std::f64::consts::TAU * x);
        z[m] += fw;
        let mut phase = Complex64::new(1.0, 0.0);
        for q in 1..=m {
            phase *= step;
            // conj(phase) is e^{+2 pi i q x}
            z[m + q] += fw * phase;
            z[m - q] += fw * phase.conj();
        }
    }
    z
}

fn breaks_of(g: &SobolevSignal) -> Vec<f64> {
    g.kinks().iter().copied().chain([0.5]).collect()
}

/// `z_q = int_0^1 g(x) e^{-2 pi i q x} dx` for `|q| <= m`.
///
/// `panels` defaults to [`default_panels`]. The result is accepted only if
/// halving every panel changes no coefficient by more than `tol`.
pub fn fourier_coeffs(
    g: &SobolevSignal,
    m: usize,
    panels: Option<usize>,
    tol: f64,
) -> Result<FourierCoeffs> {
    if m == 0 {
        return Err(Error::Config("mode bound m must be >= 1".into()));
    }
    let panels = panels.unwrap_or_else(|| default_panels(m));
    let breaks = breaks_of(g);
    let coarse = coeffs_with_rule(g, m, &QuadRule::composite(panels, &breaks));
    let fine = coeffs_with_rule(g, m, &QuadRule::composite_split(panels, &breaks, 2));
    let change = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if !(change <= tol) {
        return Err(Error::NotConverged { change, tol });
    }
    FourierCoeffs::new(fine)
}

/// Fourier coefficients of the folded, boundary-corrected signal.
///
/// Linear in `f`; the correction order is `f.smoothness()`.
pub fn operator_t(f: &SobolevSignal, m: usize) -> Result<FourierCoeffs> {
    let basis = hermite_basis(f.smoothness())?;
    fourier_coeffs(&fold(f, &basis), m, None, COEFF_TOL)
}

/// `sum_q z_q e^{2 pi i q x}` by direct summation.
pub fn truncated_series_eval(z: &FourierCoeffs, x: f64) -> Complex64 {
    let m = z.m() as i64;
    (-m..=m)
        .map(|q| z.get(q) * Complex64::from_polar(1.0, std::f64::consts::TAU * q as f64 * x))
        .sum()
}

/// `sqrt(sum_{r<=s} int |f^{(r)}|^2)` on a fixed composite rule with `panels` panels.
///
/// For signals whose `s`-th derivative is not square integrable this is a
/// finite lower estimate of an infinite norm.
pub fn hs_norm_at(f: &SobolevSignal, s: usize, panels: usize) -> f64 {
    sobolev_sum(f, s, &QuadRule::composite(panels, f.kinks())).sqrt()
}

fn sobolev_sum(f: &SobolevSignal, s: usize, rule: &QuadRule) -> f64 {
    (0..=s)
        .map(|r| {
            let d = f.derivative_fn(r);
            rule.integrate(|x| d(x).powi(2))
        })
        .sum()
}

/// [`hs_norm_at`] with a refinement check: errors if halving every panel
/// changes the result by more than [`NORM_TOL`] relative.
pub fn hs_norm(f: &SobolevSignal, s: usize, resolution: usize) -> Result<f64> {
    let norm = |split| {
        let rule = QuadRule::composite_split(resolution, f.kinks(), split);
        sobolev_sum(f, s, &rule).sqrt()
    };
    let (coarse, fine) = (norm(1), norm(2));
    let change = (fine - coarse).abs() / fine.max(f64::MIN_POSITIVE);
    if !(change <= NORM_TOL) {
        return Err(Error::NotConverged { change, tol: NORM_TOL });
    }
    Ok(fine)
}
