use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::signal::{Func, SobolevSignal};
use crate::error::{Error, Result};

/// Largest smoothness index accepted by [`hermite_basis`].
pub const MAX_SMOOTHNESS: usize = 8;
const RESIDUAL_LIMIT: f64 = 1e-8;

/// Two-point boundary-correction polynomials `q_0..q_{s-1}` of degree `2s-1` with
/// `q_j^{(r)}(0) = δ_{jr}` and `q_j^{(r)}(1) = -δ_{jr}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    s: usize,
    /// Monomial coefficients, ascending powers, one row per polynomial.
    coeffs: Vec<Vec<f64>>,
}

impl HermiteBasis {
    pub fn smoothness(&self) -> usize {
        self.s
    }

    pub fn coeffs(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    /// `q_j^{(order)}(x)`.
    pub fn eval(&self, j: usize, order: usize, x: f64) -> f64 {
        self.coeffs[j]
            .iter()
            .enumerate()
            .skip(order)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + c * falling(i, order))
    }
}

/// `i (i-1) .. (i-r+1)`.
fn falling(i: usize, r: usize) -> f64 {
    ((i + 1 - r)..=i).map(|v| v as f64).product()
}

/// Solve the `2s x 2s` Hermite interpolation systems.
pub fn hermite_basis(s: usize) -> Result<HermiteBasis> {
    if s == 0 || s > MAX_SMOOTHNESS {
        return Err(Error::Config(format!("smoothness must lie in 1..={MAX_SMOOTHNESS}, got {s}")));
    }
    let n = 2 * s;
    // rows 0..s: derivative r at 0; rows s..2s: derivative r at 1
    let a = DMatrix::from_fn(n, n, |row, i| {
        let r = row % s;
        if i < r {
            0.0
        } else if row < s {
            if i == r {
                falling(i, r)
            } else {
                0.0
            }
        } else {
            falling(i, r)
        }
    });
    let lu = a.clone().lu();
    let mut coeffs = Vec::with_capacity(s);
    for j in 0..s {
        let mut rhs = DVector::zeros(n);
        rhs[j] = 1.0;
        rhs[s + j] = -1.0;
        let singular = Error::IllConditioned { residual: f64::INFINITY, limit: RESIDUAL_LIMIT };
        let mut c = lu.solve(&rhs).ok_or(singular)?;
        // the system has integer entries, so refinement recovers most lost digits
        for _ in 0..3 {
            if let Some(dc) = lu.solve(&(&rhs - &a * &c)) {
                c += dc;
            }
        }
        // relative to the size of the terms being summed in each row
        let terms = a.abs() * c.abs();
        let residual = (&a * &c - &rhs).abs().component_div(&terms.add_scalar(1.0)).amax();
        if residual > RESIDUAL_LIMIT {
            return Err(Error::IllConditioned { residual, limit: RESIDUAL_LIMIT });
        }
        coeffs.push(c.iter().copied().collect());
    }
    Ok(HermiteBasis { s, coeffs })
}

/// Boundary-corrected signal `g = f + sum_j (f^{(j)}(1) - f^{(j)}(0)) q_j`, so that
/// `g^{(r)}(0) = f^{(r)}(1)` and `g^{(r)}(1) = f^{(r)}(0)` for `r < s`.
pub fn periodize(f: &SobolevSignal, basis: &HermiteBasis) -> SobolevSignal {
    let s = basis.smoothness();
    let jumps: Vec<f64> = (0..s).map(|j| f.derivative(j, 1.0) - f.derivative(j, 0.0)).collect();
    let orders = f.analytic_orders().max(s);
    let derivs = (0..orders)
        .map(|r| {
            let fr = f.derivative_fn(r);
            let basis = basis.clone();
            let jumps = jumps.clone();
            Arc::new(move |x: f64| {
                fr(x) + jumps.iter().enumerate().map(|(j, v)| v * basis.eval(j, r, x)).sum::<f64>()
            }) as Func
        })
        .collect();
    SobolevSignal::new(format!("periodized({})", f.name()), f.smoothness(), derivs)
        .with_kinks(f.kinks().iter().copied())
}

/// The folded signal: `g(2x)` on `[0, 1/2)` and `f(2x - 1)` on `[1/2, 1]`.
///
/// The second half reproduces `f` exactly; both junctions are `C^{s-1}`.
pub fn fold(f: &SobolevSignal, basis: &HermiteBasis) -> SobolevSignal {
    let g = periodize(f, basis);
    let orders = f.analytic_orders().max(basis.smoothness());
    let derivs = (0..orders)
        .map(|r| {
            let (gr, fr) = (g.derivative_fn(r), f.derivative_fn(r));
            let scale = (r as f64).exp2();
            Arc::new(move |x: f64| {
                if x < 0.5 {
                    scale * gr(2.0 * x)
                } else {
                    scale * fr(2.0 * x - 1.0)
                }
            }) as Func
        })
        .collect();
    let kinks = f
        .kinks()
        .iter()
        .flat_map(|c| [c / 2.0, (c + 1.0) / 2.0])
        .chain([0.5]);
    SobolevSignal::new(format!("folded({})", f.name()), f.smoothness(), derivs).with_kinks(kinks)
}
