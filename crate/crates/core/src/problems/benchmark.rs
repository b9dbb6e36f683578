use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::spectral::DyadicGrid;

/// An axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Config(format!("invalid parameter box {bounds:?}")));
        }
        Ok(Self { lower: bounds.iter().map(|b| b.0).collect(), upper: bounds.iter().map(|b| b.1).collect() })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim() && mu.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    UniformRandom,
    /// `n` nodes per axis including the endpoints (tensor grid).
    Equispaced,
    /// The `n - 1` cell midpoints of the equispaced nodes per axis (tensor grid).
    Midpoints,
}

/// Parameter samples from `bx`. Random draws depend only on `seed`; the grid
/// schemes use the first axis fastest.
pub fn sample_parameters(bx: &ParamBox, n: usize, scheme: SamplingScheme, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        match scheme {
            SamplingScheme::Equispaced if n == 1 => vec![0.5 * (lo + hi)],
            SamplingScheme::Equispaced => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            _ => (0..n - 1).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / (n - 1) as f64).collect(),
        }
    };
    match scheme {
        SamplingScheme::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n)
                .map(|_| bx.lower.iter().zip(&bx.upper).map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect())
                .collect())
        }
        _ => {
            let axes: Vec<Vec<f64>> = bx.lower.iter().zip(&bx.upper).map(|(lo, hi)| axis(*lo, *hi)).collect();
            let total: usize = axes.iter().map(Vec::len).product();
            let points = (0..total)
                .map(|mut idx| {
                    axes.iter()
                        .map(|values| {
                            let v = values[idx % values.len()];
                            idx /= values.len();
                            v
                        })
                        .collect()
                })
                .collect();
            Ok(points)
        }
    }
}

/// `u_mu(x) = mu_3 |x - mu_1|^3 exp(-mu_2 x)` on `Theta = [0,1] x [0,1] x [1,2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOperator {
    pub domain: ParamBox,
    /// Allow parameters outside `domain`.
    pub allow_outside: bool,
}

impl Default for BenchmarkOperator {
    fn default() -> Self {
        Self::new()
    }
}

impl BenchmarkOperator {
    /// Sobolev index of every solution.
    pub const S: usize = 3;
    /// Smoothness of the parameter-to-solution map.
    pub const R: usize = 2;
    pub const P: usize = 3;

    pub fn new() -> Self {
        Self { domain: ParamBox::new(&[(0.0, 1.0), (0.0, 1.0), (1.0, 2.0)]).expect("valid box"), allow_outside: false }
    }

    pub fn value(mu: &[f64], x: f64) -> f64 {
        mu[2] * (x - mu[0]).abs().powi(3) * (-mu[1] * x).exp()
    }

    pub fn eval(&self, mu: &[f64], grid: &DyadicGrid) -> Result<Vec<f64>> {
        if mu.len() != Self::P {
            return Err(Error::Shape(format!("benchmark takes 3 parameters, got {}", mu.len())));
        }
        if !self.allow_outside && !self.domain.contains(mu) {
            return Err(Error::OutOfDomain { value: mu.to_vec() });
        }
        Ok(grid.nodes().into_iter().map(|x| Self::value(mu, x)).collect())
    }

    /// `n` uniformly random parameters and their solutions.
    pub fn dataset(&self, n: usize, grid: DyadicGrid, seed: u64, split: Split) -> Result<Dataset> {
        let mus = sample_parameters(&self.domain, n, SamplingScheme::UniformRandom, seed)?;
        let pairs = mus
            .into_iter()
            .map(|mu| {
                let u = self.eval(&mu, &grid)?;
                Ok((mu, u))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::from_pairs(&pairs, Self::P, grid, split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_values() {
        let op = BenchmarkOperator::new();
        let g = DyadicGrid::new(1).unwrap();
        assert_eq!(op.eval(&[0.0, 0.0, 1.0], &g).unwrap()[1], 0.125);
        assert_eq!(op.eval(&[0.5, 0.0, 2.0], &g).unwrap()[0], 0.25);
        let v = op.eval(&[0.5, 1.0, 1.0], &g).unwrap()[2];
        assert!((v - 0.125 * (-1.0f64).exp()).abs() < 1e-16);
        assert!((v - 0.0459849).abs() < 1e-7);
    }

    #[test]
    fn rejects_outside_unless_allowed() {
        let g = DyadicGrid::new(2).unwrap();
        let mut op = BenchmarkOperator::new();
        assert!(matches!(op.eval(&[0.3, 0.3, 0.08], &g), Err(Error::OutOfDomain { .. })));
        op.allow_outside = true;
        assert!(op.eval(&[0.3, 0.3, 0.08], &g).is_ok());
    }

    #[test]
    fn equispaced_and_midpoints() {
        let unit = ParamBox::new(&[(0.0, 1.0)]).unwrap();
        let eq = sample_parameters(&unit, 3, SamplingScheme::Equispaced, 0).unwrap();
        assert_eq!(eq, vec![vec![0.0], vec![0.5], vec![1.0]]);
        let mid = sample_parameters(&unit, 3, SamplingScheme::Midpoints, 0).unwrap();
        assert_eq!(mid, vec![vec![0.25], vec![0.75]]);
        let square = ParamBox::new(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        let grid = sample_parameters(&square, 2, SamplingScheme::Equispaced, 0).unwrap();
        assert_eq!(grid, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn random_samples_in_box_and_reproducible() {
        let op = BenchmarkOperator::new();
        let a = sample_parameters(&op.domain, 500, SamplingScheme::UniformRandom, 42).unwrap();
        assert_eq!(a.len(), 500);
        assert!(a.iter().all(|mu| op.domain.contains(mu)));
        assert_eq!(a, sample_parameters(&op.domain, 500, SamplingScheme::UniformRandom, 42).unwrap());
        assert_ne!(a, sample_parameters(&op.domain, 500, SamplingScheme::UniformRandom, 43).unwrap());
    }

    #[test]
    fn third_derivative_jumps_at_kink() {
        // d^3/dx^3 of |x - c|^3 jumps by 12 mu_3 e^{-mu_2 c}
        let mu = [0.4, 0.5, 1.5];
        let d3 = |x: f64, h: f64| {
            let f = |t: f64| BenchmarkOperator::value(&mu, t);
            (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
        };
        let h = 1e-3;
        let jump = d3(mu[0] + 0.05, h) - d3(mu[0] - 0.05, h);
        let expect = 12.0 * mu[2] * (-mu[1] * mu[0]).exp();
        assert!((jump - expect).abs() < 0.1 * expect, "{jump} vs {expect}");
        // the fourth difference at the kink grows like 1/h
        let d4 = |h: f64| {
            let f = |t: f64| BenchmarkOperator::value(&mu, t);
            let x = mu[0];
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / h.powi(4)
        };
        assert!(d4(1e-3) > 5.0 * d4(1e-2));
    }
}
