//! Constructive builders. Nothing here is trained: every weight is written down
//! from the algebra of complex multiplication.
//!
//! The basic block maps `[w_1, .., w_n]` to `[w_1, z w_1, .., w_n, z w_n]` with
//! four convolutions and a handful of reshapes:
//!
//! 1. transposed conv (4 -> 4, kernel 2, stride 2): identity and `z` branches;
//! 2. conv (4 -> 2, kernel 1): sum the branches, rows `[w..]` and `[z w..]`;
//! 3. flatten to one channel;
//! 4. conv (1 -> 4, kernel 2, stride 2): back to the 4-row complex embedding;
//! 5. conv (4 -> 8, kernel 2, dilation n): pair `w_p` with `z w_p`;
//! 6. transpose / reshape / transpose: interleave the pairs.
//!
//! Several blocks with different multipliers run side by side as one grouped
//! network; each group is one Fourier mode.

use num_complex::Complex64;

use super::grid::DyadicGrid;
use crate::complex::{complex_block, embed, extract, to_real_flat};
use crate::convnet::{ConvSpec, Layer, LayerWeights, NetworkGraph, Shape, Tensor2};
use crate::error::{Error, Result};

/// Parameterised layers contributed by one mode-doubling block.
pub const BLOCK_CONV_LAYERS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    /// Mode-doubling block, `C^{2^{k-1}} -> C^{2^k}` on embedded tensors.
    PhiZ,
    /// Single-frequency synthesis `C -> C^{N_h - 1}`.
    FOmega,
    /// Truncated Fourier synthesis `C^{2m+1} -> C^{N_h}`.
    SM,
    /// Real decoder `C^{2m+1} -> R^{N_h}` on the second half of a twice-finer grid.
    Psi,
}

/// A constructed network plus the parameters it was built for.
#[derive(Debug, Clone)]
pub struct SpectralNet {
    pub graph: NetworkGraph,
    pub kind: SpectralKind,
    /// Mode bound (0 for single-mode nets).
    pub m: usize,
    /// Level of the target grid.
    pub k: u32,
}

impl SpectralNet {
    /// Evaluate on complex input, returning complex output.
    ///
    /// Input layout per kind: embedded `4 x 2^{k-1}` for [`SpectralKind::PhiZ`],
    /// interleaved real pairs for the others.
    pub fn eval_complex(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.kind == SpectralKind::Psi {
            return Err(Error::Config("the decoder has real output; use eval_real".into()));
        }
        extract(&self.graph.forward(&self.input_tensor(z)?)?)
    }

    pub fn eval_real(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.graph.forward(&self.input_tensor(z)?)?.into_data())
    }

    fn input_tensor(&self, z: &[Complex64]) -> Result<Tensor2> {
        let x = match self.kind {
            SpectralKind::PhiZ => embed(z),
            _ => Tensor2::row(to_real_flat(z)),
        };
        if x.shape() != self.graph.input_shape() {
            return Err(Error::Shape(format!(
                "{} complex inputs do not match graph input {}",
                z.len(),
                self.graph.input_shape()
            )));
        }
        Ok(x)
    }

    /// Conv depth divided by `log2(1/h)`; bounded by a constant independent of `k`.
    pub fn depth_constant(&self) -> f64 {
        self.graph.depth() as f64 / self.k as f64
    }
}

/// `e^{2 pi i r / n}` with exact values on the axes.
fn unit_root(r: i64, n: i64) -> Complex64 {
    let r = r.rem_euclid(n);
    if 4 * r % n == 0 {
        return match 4 * r / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let r = if 2 * r > n { r - n } else { r };
    Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / n as f64)
}

/// Layers of `groups` parallel mode-doubling blocks acting on `n` complex entries
/// per group, group `g` multiplying by `z[g]`.
fn doubling_block(z: &[Complex64], n: usize) -> Result<Vec<Layer>> {
    let g = z.len();

    // f1: identity branch on channels 0,1; z branch on channels 2,3
    let spec1 = ConvSpec::new(4 * g, 4 * g, 2).with_stride(2).with_groups(g).transposed();
    let mut w1 = vec![0.0; spec1.weight_len()];
    for (gi, zg) in z.iter().enumerate() {
        let block = complex_block(*zg);
        let kernels = [[1.0, 0.0], [0.0, 1.0], block[0], block[1]];
        for (a, kernel) in kernels.iter().enumerate() {
            let base = ((gi * 4 + a) * 4 + a) * 2;
            w1[base..base + 2].copy_from_slice(kernel);
        }
    }

    // f2: rows [Re w, Im w] and [Re zw, Im zw] interleaved along the length
    let spec2 = ConvSpec::new(4 * g, 2 * g, 1).with_groups(g);
    let mut w2 = vec![0.0; spec2.weight_len()];
    for gi in 0..g {
        for (out, ins) in [(0, [0, 1]), (1, [2, 3])] {
            for a in ins {
                w2[(gi * 2 + out) * 4 + a] = 1.0;
            }
        }
    }

    // f3: split the flattened row back into the 4-row embedding
    let spec3 = ConvSpec::new(g, 4 * g, 2).with_stride(2).with_groups(g);
    let mut w3 = vec![0.0; spec3.weight_len()];
    for c in 0..4 * g {
        w3[c * 2 + (c % 4) % 2] = 1.0;
    }

    // f4: output channel i reads input channel i mod 4 at tap i / 4
    let spec4 = ConvSpec::new(4 * g, 8 * g, 2).with_groups(g).with_dilation(n);
    let mut w4 = vec![0.0; spec4.weight_len()];
    for gi in 0..g {
        for i in 0..8 {
            let (a, tap) = (i % 4, i / 4);
            w4[((gi * 8 + i) * 4 + a) * 2 + tap] = 1.0;
        }
    }

    Ok(vec![
        Layer::conv(spec1, LayerWeights::no_bias(w1))?,
        Layer::conv(spec2, LayerWeights::no_bias(w2))?,
        Layer::Reshape { channels: g, length: 4 * n },
        Layer::conv(spec3, LayerWeights::no_bias(w3))?,
        Layer::conv(spec4, LayerWeights::no_bias(w4))?,
        Layer::Transpose { batches: g },
        Layer::Reshape { channels: g * 2 * n, length: 4 },
        Layer::Transpose { batches: g },
    ])
}

/// Mode-doubling network `[w_1..w_n] -> [w_1, z w_1, .., w_n, z w_n]`, `n = 2^{k-1}`.
pub fn build_phi_z(k: u32, z: Complex64) -> Result<SpectralNet> {
    let n = block_input_len(k)?;
    let graph = NetworkGraph::new(Shape::new(4, n), doubling_block(&[z], n)?)?;
    Ok(SpectralNet { graph, kind: SpectralKind::PhiZ, m: 0, k })
}

fn block_input_len(k: u32) -> Result<usize> {
    if k == 0 || k > DyadicGrid::MAX_LEVEL {
        return Err(Error::Config(format!("level must lie in 1..={}, got {k}", DyadicGrid::MAX_LEVEL)));
    }
    Ok(1usize << (k - 1))
}

/// Exponent of `z` held at each output position of the chain
/// `phi^k_{z^{2^{k-1}}} ∘ .. ∘ phi^1_z` applied to a single `w`.
///
/// Traced through the actual networks: each level is run with multiplier 2 on
/// odd integer tags, so an output either reproduces a tag (copy) or doubles it.
pub fn derive_permutation(k: u32) -> Result<Vec<usize>> {
    block_input_len(k)?;
    let mut exponents = vec![0usize];
    for level in 1..=k {
        let n = 1usize << (level - 1);
        let net = build_phi_z(level, Complex64::new(2.0, 0.0))?;
        let tags: Vec<Complex64> = (0..n).map(|p| Complex64::new((2 * p + 1) as f64, 0.0)).collect();
        let out = net.eval_complex(&tags)?;
        let mut next = Vec::with_capacity(2 * n);
        for v in out {
            let t = v.re as usize;
            if v.im != 0.0 || v.re != t as f64 {
                return Err(Error::Solver(format!("tag trace produced non-integer value {v}")));
            }
            let (src, shift) = if t % 2 == 1 { (t / 2, 0) } else { (t / 4, n) };
            next.push(exponents[src] + shift);
        }
        exponents = next;
    }
    Ok(exponents)
}

/// Per-group inverse-permutation gather on `groups` stacked `4 x len` blocks.
fn unpermute_layer(groups: usize, exponents: &[usize]) -> Layer {
    let len = exponents.len();
    let mut position_of = vec![0; len];
    for (q, &e) in exponents.iter().enumerate() {
        position_of[e] = q;
    }
    let indices = (0..4 * groups)
        .flat_map(|row| position_of.iter().map(move |&q| row * len + q))
        .collect();
    Layer::Gather { shape: Shape::new(4 * groups, len), indices }
}

/// `1 x 2G` interleaved pairs to the stacked `4G x 1` embedding.
fn embed_layer(groups: usize) -> Layer {
    let indices = (0..4 * groups).map(|c| 2 * (c / 4) + c % 2).collect();
    Layer::Gather { shape: Shape::new(4 * groups, 1), indices }
}

/// Stacked synthesis: group `g` maps `w_g` to `[w_g z_g(1)^j]_{j < 2^k}` where
/// `z_g(level)` is the multiplier used at that level.
fn stacked_synthesis(k: u32, multipliers: impl Fn(u32) -> Vec<Complex64>) -> Result<NetworkGraph> {
    let groups = multipliers(1).len();
    let mut graph = NetworkGraph::new(Shape::new(1, 2 * groups), vec![embed_layer(groups)])?;
    for level in 1..=k {
        let n = 1usize << (level - 1);
        for layer in doubling_block(&multipliers(level), n)? {
            graph.push(layer)?;
        }
    }
    graph.push(unpermute_layer(groups, &derive_permutation(k)?))?;
    Ok(graph)
}

/// Single-frequency synthesis `w -> [w e^{i omega x_j}]_{j=1}^{N_h-1}`.
pub fn build_f_omega(k: u32, omega: f64) -> Result<SpectralNet> {
    block_input_len(k)?;
    let graph = stacked_synthesis(k, |level| {
        // omega * h * 2^{level-1}; scaling by powers of two is exact
        let angle = omega * (level as f64 - 1.0 - k as f64).exp2();
        vec![Complex64::from_polar(1.0, angle)]
    })?;
    Ok(SpectralNet { graph, kind: SpectralKind::FOmega, m: 0, k })
}

fn check_modes(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Config("mode bound m must be >= 1".into()));
    }
    Ok(())
}

/// Truncated Fourier synthesis `Z -> [sum_q z_q e^{2 pi i q x_j}]_{j=1}^{N_h}`.
pub fn build_s_m(k: u32, m: usize) -> Result<SpectralNet> {
    block_input_len(k)?;
    check_modes(m)?;
    let groups = 2 * m + 1;
    let cells = 1i64 << k;
    let mut graph = stacked_synthesis(k, |level| {
        let shift = 1i64 << (level - 1);
        (-(m as i64)..=m as i64).map(|q| unit_root(q * shift, cells)).collect()
    })?;

    // sum the 2m+1 groups channel by channel
    let sum = ConvSpec::new(4 * groups, 4, 1);
    let mut w = vec![0.0; sum.weight_len()];
    for c in 0..4 {
        for g in 0..groups {
            w[c * 4 * groups + g * 4 + c] = 1.0;
        }
    }
    graph.push(Layer::conv(sum, LayerWeights::no_bias(w))?)?;
    // periodicity: the last node repeats the first
    graph.push(Layer::Append(vec![0]))?;
    Ok(SpectralNet { graph, kind: SpectralKind::SM, m, k })
}

/// Real decoder: synthesis on the level-`k+1` grid, keep its second half
/// (nodes `(x_j + 1)/2`), keep the real part.
pub fn build_psi(k: u32, m: usize) -> Result<SpectralNet> {
    block_input_len(k)?;
    check_modes(m)?;
    let nodes = (1usize << k) + 1;
    let fine = build_s_m(k + 1, m)?;
    let mut graph = fine.graph;
    graph.push(Layer::Truncate(nodes - 1..2 * nodes - 1))?;
    graph.push(Layer::transpose())?;
    graph.push(Layer::Truncate(0..1))?;
    graph.push(Layer::transpose())?;
    Ok(SpectralNet { graph, kind: SpectralKind::Psi, m, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut impl Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn unit_root_axes_are_exact() {
        assert_eq!(unit_root(0, 8), Complex64::new(1.0, 0.0));
        assert_eq!(unit_root(2, 8), Complex64::new(0.0, 1.0));
        assert_eq!(unit_root(-4, 8), Complex64::new(-1.0, 0.0));
        assert_eq!(unit_root(6, 8), Complex64::new(0.0, -1.0));
        assert!(close(unit_root(1, 8), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4), 1e-15));
    }

    #[test]
    fn phi_with_unit_multiplier_duplicates() {
        let net = build_phi_z(3, Complex64::new(1.0, 0.0)).unwrap();
        let w: Vec<_> = (0..4).map(|p| Complex64::new(p as f64, -(p as f64) / 2.0)).collect();
        let out = net.eval_complex(&w).unwrap();
        let expect: Vec<_> = w.iter().flat_map(|v| [*v, *v]).collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn phi_level_one_times_i() {
        let net = build_phi_z(1, Complex64::i()).unwrap();
        let out = net.eval_complex(&[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(out, vec![Complex64::new(1.0, 0.0), Complex64::i()]);
    }

    #[test]
    fn phi_architecture_bounds() {
        for k in 1..=8 {
            let g = build_phi_z(k, Complex64::new(0.3, -0.7)).unwrap().graph;
            assert_eq!(g.depth(), BLOCK_CONV_LAYERS);
            assert!(g.max_channels() <= 8);
            assert!(g.max_kernel_size() <= 2);
        }
    }

    #[test]
    fn phi_interleaves_random_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = rand_c(&mut rng);
        let net = build_phi_z(4, z).unwrap();
        let w: Vec<_> = (0..8).map(|_| rand_c(&mut rng)).collect();
        let out = net.eval_complex(&w).unwrap();
        for (p, wp) in w.iter().enumerate() {
            assert!(close(out[2 * p], *wp, 1e-12));
            assert!(close(out[2 * p + 1], z * wp, 1e-12));
        }
    }

    #[test]
    fn permutation_small_levels() {
        assert_eq!(derive_permutation(1).unwrap(), vec![0, 1]);
        assert_eq!(derive_permutation(2).unwrap(), vec![0, 2, 1, 3]);
        let p = derive_permutation(6).unwrap();
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn f_omega_examples() {
        let w = Complex64::new(0.4, -1.3);
        let flat = build_f_omega(3, 0.0).unwrap().eval_complex(&[w]).unwrap();
        assert_eq!(flat.len(), 8);
        assert!(flat.iter().all(|v| close(*v, w, 1e-15)));

        let out = build_f_omega(2, std::f64::consts::TAU)
            .unwrap()
            .eval_complex(&[Complex64::new(1.0, 0.0)])
            .unwrap();
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::i(),
            Complex64::new(-1.0, 0.0),
            -Complex64::i(),
        ];
        for (a, b) in out.iter().zip(expect) {
            assert!(close(*a, b, 1e-15), "{a} vs {b}");
        }
    }

    #[test]
    fn s_m_examples() {
        let m = 3;
        let mut z = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        z[m] = Complex64::new(1.0, 0.0);
        let net = build_s_m(4, m).unwrap();
        let out = net.eval_complex(&z).unwrap();
        assert_eq!(out.len(), 17);
        assert!(out.iter().all(|v| close(*v, Complex64::new(1.0, 0.0), 1e-15)));

        let z = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let out = build_s_m(2, 1).unwrap().eval_complex(&z).unwrap();
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)];
        for (a, (re, im)) in out.iter().zip(expect) {
            assert!(close(*a, Complex64::new(re, im), 1e-15), "{a}");
        }
    }

    #[test]
    fn psi_cosine_example() {
        let (k, m) = (4, 2);
        let mut z = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        z[m - 1] = Complex64::new(0.5, 0.0);
        z[m + 1] = Complex64::new(0.5, 0.0);
        let out = build_psi(k, m).unwrap().eval_real(&z).unwrap();
        let grid = DyadicGrid::new(k).unwrap();
        for (j, x) in grid.nodes().into_iter().enumerate() {
            let expect = -(std::f64::consts::PI * x).cos();
            assert!((out[j] - expect).abs() <= 1e-13, "node {j}: {} vs {expect}", out[j]);
        }
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let net = build_s_m(3, 2).unwrap();
        assert!(net.eval_complex(&[Complex64::new(1.0, 0.0); 4]).is_err());
        assert!(build_s_m(3, 0).is_err());
        assert!(build_phi_z(0, Complex64::new(1.0, 0.0)).is_err());
    }
}
