//! Decay of the decoder error `max_j |f(x_j) - Psi_j(T f)|` in the mode bound.

use std::fmt;

use rayon::prelude::*;

use super::svg::{Chart, Guide, Series};
use crate::complex::to_real_flat;
use crate::error::{Error, Result};
use crate::fourier::{fold, hermite_basis, hs_norm, hs_norm_at, operator_t, SobolevSignal};
use crate::spectral::{build_psi, DyadicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Signal {
    /// `|x - 1/5|`, `s = 1`.
    AbsShift,
    /// `x^{3/2}`, `s = 2`.
    XPow32,
}

impl Fig1Signal {
    pub const ALL: [Fig1Signal; 2] = [Fig1Signal::AbsShift, Fig1Signal::XPow32];

    pub fn signal(self) -> SobolevSignal {
        match self {
            Fig1Signal::AbsShift => SobolevSignal::abs_shift(0.2),
            Fig1Signal::XPow32 => SobolevSignal::x_pow_3_2(),
        }
    }

    pub fn smoothness(self) -> usize {
        self.signal().smoothness()
    }
}

impl fmt::Display for Fig1Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fig1Signal::AbsShift => "abs_shift",
            Fig1Signal::XPow32 => "x_pow_3_2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig1Row {
    pub signal: Fig1Signal,
    pub s: usize,
    pub k: u32,
    pub m: usize,
    pub error: f64,
}

/// Error of the constructed decoder for every `(k, m)`; rows sorted by `(k, m)`.
pub fn run_fig1(signal: Fig1Signal, m_list: &[usize], k_list: &[u32]) -> Result<Vec<Fig1Row>> {
    let f = signal.signal();
    let s = f.smoothness();
    let coeffs = m_list
        .par_iter()
        .map(|&m| Ok((m, to_real_flat(operator_t(&f, m)?.as_slice()))))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(u32, usize, &Vec<f64>)> =
        k_list.iter().flat_map(|&k| coeffs.iter().map(move |(m, z)| (k, *m, z))).collect();
    let mut rows = cells
        .par_iter()
        .map(|&(k, m, z)| {
            let psi = build_psi(k, m)?;
            let out = psi.graph.forward(&crate::convnet::Tensor2::row(z.clone()))?.into_data();
            let grid = DyadicGrid::new(k)?;
            let error = grid.nodes().iter().zip(&out).map(|(x, y)| (f.eval(*x) - y).abs()).fold(0.0, f64::max);
            Ok(Fig1Row { signal, s, k, m, error })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.k, r.m));
    Ok(rows)
}

/// Norm of the folded signal used in the error bound and whether the
/// quadrature converged. A divergent norm yields a finite lower estimate.
pub fn folded_norm(signal: Fig1Signal) -> Result<(f64, bool)> {
    let f = signal.signal();
    let s = f.smoothness();
    let folded = fold(&f, &hermite_basis(s)?);
    match hs_norm(&folded, s, 256) {
        Ok(v) => Ok((v, true)),
        Err(Error::NotConverged { .. }) => Ok((hs_norm_at(&folded, s, 256), false)),
        Err(e) => Err(e),
    }
}

/// `sqrt(2 / (2s - 1)) m^{1/2 - s} norm`.
pub fn theorem_bound(s: usize, m: usize, norm: f64) -> f64 {
    let s = s as f64;
    (2.0 / (2.0 * s - 1.0)).sqrt() * (m as f64).powf(0.5 - s) * norm
}

/// Least-squares slope of `log(error)` against `log(m)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn fig1_csv(rows: &[Fig1Row]) -> String {
    let mut out = String::from("signal,s,k,m,error\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{:.16e}\n", r.signal, r.s, r.k, r.m, r.error));
    }
    out
}

/// One series per grid level plus the `m^{1/2 - s}` guide.
pub fn fig1_chart(rows: &[Fig1Row]) -> Chart {
    let mut ks: Vec<u32> = rows.iter().map(|r| r.k).collect();
    ks.dedup();
    let series = ks
        .iter()
        .map(|&k| Series {
            label: format!("N_h = {}", (1usize << k) + 1),
            points: rows.iter().filter(|r| r.k == k).map(|r| (r.m as f64, r.error)).collect(),
        })
        .collect();
    let (signal, s) = rows.first().map_or((Fig1Signal::AbsShift, 1), |r| (r.signal, r.s));
    let guides = rows
        .first()
        .map(|r| Guide {
            label: format!("m^(1/2-{s})"),
            slope: 0.5 - s as f64,
            anchor: (r.m as f64, r.error),
        })
        .into_iter()
        .collect();
    Chart { title: format!("decoder error, {signal}"), x_label: "m".into(), y_label: "max error".into(), series, guides }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|m: &f64| (*m, 3.0 * m.powf(-0.5))).collect();
        assert!((loglog_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn bound_formula() {
        assert!((theorem_bound(1, 4, 1.0) - 2f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((theorem_bound(2, 4, 3.0) - (2.0f64 / 3.0).sqrt() * 0.125 * 3.0).abs() < 1e-15);
    }

    #[test]
    fn small_run_decreases() {
        let rows = run_fig1(Fig1Signal::AbsShift, &[4, 16], &[4]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].error < rows[0].error);
        let csv = fig1_csv(&rows);
        assert!(csv.starts_with("signal,s,k,m,error\nabs_shift,1,4,4,"));
    }
}
