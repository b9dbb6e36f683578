//! Real representations of complex vectors.
//!
//! A complex number `z` is embedded as the four-channel column
//! `[Re z, Im z, Re z, Im z]`; a vector of `n` complex numbers becomes a `4 x n`
//! tensor. The duplicated rows let a single transposed convolution carry both the
//! identity and the multiplication-by-`z` branch.

use num_complex::Complex64;

use crate::convnet::Tensor2;
use crate::error::{Error, Result};

/// Tolerance used by [`extract`] when checking the duplicated rows.
pub const EMBED_TOL: f64 = 1e-12;

/// `4 x n` embedding of `z`.
pub fn embed(z: &[Complex64]) -> Tensor2 {
    let n = z.len();
    let mut data = Vec::with_capacity(4 * n);
    for row in 0..4 {
        data.extend(z.iter().map(|w| if row % 2 == 0 { w.re } else { w.im }));
    }
    Tensor2::new(4, n, data).expect("embedding of a non-empty vector")
}

/// Inverse of [`embed`]; rejects tensors whose rows 3–4 differ from rows 1–2.
pub fn extract(x: &Tensor2) -> Result<Vec<Complex64>> {
    if x.channels() != 4 {
        return Err(Error::Shape(format!("embedded tensor needs 4 channels, got {}", x.shape())));
    }
    (0..x.length())
        .map(|j| {
            let (re, im) = (x.get(0, j), x.get(1, j));
            let deviation = (re - x.get(2, j)).abs().max((im - x.get(3, j)).abs());
            if deviation > EMBED_TOL * (1.0 + re.abs().max(im.abs())) || deviation.is_nan() {
                return Err(Error::Embedding { column: j, deviation });
            }
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Interleaved real layout `[Re z_0, Im z_0, Re z_1, ...]`, i.e. `C^n ≅ R^{2n}`.
pub fn to_real_flat(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|w| [w.re, w.im]).collect()
}

pub fn from_real_flat(v: &[f64]) -> Result<Vec<Complex64>> {
    if v.len() % 2 != 0 {
        return Err(Error::Shape(format!("odd-length real vector ({}) is not complex", v.len())));
    }
    Ok(v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

/// The 2x2 block `[[Re z, Im z], [-Im z, Re z]]`.
///
/// Acting on the row vector `[Re w, Im w]` from the right it yields
/// `[Re(zw), Im(zw)]`: row `r` is the kernel of input channel `r`, column `c`
/// the output position it writes to.
pub fn complex_block(z: Complex64) -> [[f64; 2]; 2] {
    [[z.re, z.im], [-z.im, z.re]]
}

/// `[Re w, Im w] * block`.
pub fn apply_block(block: &[[f64; 2]; 2], w: Complex64) -> Complex64 {
    Complex64::new(
        w.re * block[0][0] + w.im * block[1][0],
        w.re * block[0][1] + w.im * block[1][1],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn embed_examples() {
        assert_eq!(embed(&[Complex64::new(1.0, 0.0)]).data(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(embed(&[Complex64::i()]).data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn extract_examples() {
        let one = Tensor2::new(4, 1, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(extract(&one).unwrap(), vec![Complex64::new(1.0, 0.0)]);
        let i = Tensor2::new(4, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(extract(&i).unwrap(), vec![Complex64::i()]);
    }

    #[test]
    fn extract_rejects_broken_duplication() {
        let bad = Tensor2::new(4, 2, vec![1.0, 2.0, 0.0, 0.0, 1.0, 2.5, 0.0, 0.0]).unwrap();
        match extract(&bad) {
            Err(Error::Embedding { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected embedding error, got {other:?}"),
        }
        assert!(extract(&Tensor2::zeros(2, 3)).is_err());
    }

    #[test]
    fn block_examples() {
        assert_eq!(complex_block(Complex64::new(1.0, 0.0)), [[1.0, 0.0], [-0.0, 1.0]]);
        assert_eq!(complex_block(Complex64::i()), [[0.0, 1.0], [-1.0, 0.0]]);
    }

    fn c() -> impl Strategy<Value = Complex64> {
        (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Complex64::new(a, b))
    }

    proptest! {
        #[test]
        fn embed_extract_round_trip(z in prop::collection::vec(c(), 1..20)) {
            prop_assert_eq!(extract(&embed(&z)).unwrap(), z.clone());
            prop_assert_eq!(from_real_flat(&to_real_flat(&z)).unwrap(), z);
        }

        #[test]
        fn block_reproduces_product(z in c(), w in c()) {
            let got = apply_block(&complex_block(z), w);
            prop_assert!((got - z * w).norm() <= 1e-12 * (1.0 + (z * w).norm()));
        }

        #[test]
        fn block_is_multiplicative(a in c(), b in c()) {
            let (ba, bb, bab) = (complex_block(a), complex_block(b), complex_block(a * b));
            for r in 0..2 {
                for col in 0..2 {
                    let prod = ba[r][0] * bb[0][col] + ba[r][1] * bb[1][col];
                    prop_assert!((prod - bab[r][col]).abs() <= 1e-12 * (1.0 + (a * b).norm()));
                }
            }
        }
    }
}
