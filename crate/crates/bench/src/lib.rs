//! Fixtures shared by the benchmarks.

use spectral_cnn::problems::{BenchmarkOperator, Dataset, Split};
use spectral_cnn::spectral::DyadicGrid;
use spectral_cnn::Complex64;

/// Deterministic, non-trivial coefficients `z_{-m..m}`.
pub fn coefficients(m: usize) -> Vec<Complex64> {
    (0..2 * m + 1).map(|q| Complex64::new((q as f64 * 0.7).sin(), (q as f64 * 1.3).cos())).collect()
}

pub fn benchmark_data(k: u32, n: usize) -> Dataset {
    let grid = DyadicGrid::new(k).expect("valid level");
    BenchmarkOperator::new().dataset(n, grid, 0, Split::Train).expect("benchmark data")
}
