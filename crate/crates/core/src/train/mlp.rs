use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::complex::to_real_flat;
use crate::convnet::{materialize_linear_map, Activation, Tensor2};
use crate::error::{Error, Result};
use crate::problems::Dataset;
use crate::spectral::{build_psi, DyadicGrid, SpectralNet};
use crate::Complex64;

/// Layer sizes of a dense block `R^p -> R^{4m+2}` with `depth` hidden layers of `width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLPShape {
    pub input: usize,
    pub width: usize,
    pub depth: usize,
    pub output: usize,
    pub slope: f64,
}

impl MLPShape {
    /// Output dimension `4m + 2` for mode bound `m`.
    pub fn for_modes(input: usize, width: usize, depth: usize, m: usize) -> Self {
        Self { input, width, depth, output: 4 * m + 2, slope: Activation::LEAKY_SLOPE }
    }

    /// `(fan_in, fan_out)` of every affine layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth + 1);
        let mut prev = self.input;
        for _ in 0..self.depth {
            dims.push((prev, self.width));
            prev = self.width;
        }
        dims.push((prev, self.output));
        dims
    }

    pub fn num_params(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| (i + 1) * o).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.input == 0 || self.width == 0 || self.output == 0 {
            return Err(Error::Config(format!("degenerate dense block {self:?}")));
        }
        Ok(())
    }
}

/// One affine layer `x -> W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Weights and biases of the dense block.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPParams {
    pub shape: MLPShape,
    pub layers: Vec<Affine>,
}

impl MLPParams {
    pub fn zeros(shape: MLPShape) -> Result<Self> {
        shape.validate()?;
        let layers = shape
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Affine { weight: DMatrix::zeros(o, i), bias: DVector::zeros(o) })
            .collect();
        Ok(Self { shape, layers })
    }

    /// Concatenated `W_1, b_1, W_2, ..` with each `W` in column-major order.
    pub fn flatten(&self) -> DVector<f64> {
        let values = self
            .layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect::<Vec<_>>();
        DVector::from_vec(values)
    }

    pub fn from_flat(shape: MLPShape, flat: &DVector<f64>) -> Result<Self> {
        if flat.len() != shape.num_params() {
            return Err(Error::Shape(format!(
                "{} values for a dense block with {} parameters",
                flat.len(),
                shape.num_params()
            )));
        }
        let mut params = Self::zeros(shape)?;
        params.assign(flat);
        Ok(params)
    }

    fn assign(&mut self, flat: &DVector<f64>) {
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.weight.len();
            l.weight.as_mut_slice().copy_from_slice(&flat.as_slice()[at..at + n]);
            at += n;
            let n = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&flat.as_slice()[at..at + n]);
            at += n;
        }
    }

    /// Every stored weight and bias counts as active in a trained dense block.
    pub fn active_weights(&self) -> usize {
        self.shape.num_params()
    }

    /// Dense-block output for the parameter columns of `inputs`.
    pub fn forward(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_cached(inputs).pop().expect("at least one layer")
    }

    /// Pre-activations of every layer (the last one is the output).
    fn forward_cached(&self, inputs: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let slope = self.shape.slope;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = inputs.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = &l.weight * &a;
            for mut col in z.column_iter_mut() {
                col += &l.bias;
            }
            if i + 1 < self.layers.len() {
                a = z.map(|v| leaky(v, slope));
            }
            pre.push(z);
        }
        pre
    }
}

#[inline]
fn leaky(v: f64, slope: f64) -> f64 {
    if v < 0.0 {
        slope * v
    } else {
        v
    }
}

#[inline]
fn leaky_derivative(v: f64, slope: f64) -> f64 {
    if v < 0.0 {
        slope
    } else {
        1.0
    }
}

/// Weights ~ Normal(0, 2 / fan_in), zero biases.
pub fn init_he(shape: MLPShape, seed: u64) -> Result<MLPParams> {
    let mut params = MLPParams::zeros(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in &mut params.layers {
        let fan_in = l.weight.ncols() as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive variance");
        // row by row so that the draw order matches the mathematical layout
        for r in 0..l.weight.nrows() {
            for c in 0..l.weight.ncols() {
                l.weight[(r, c)] = normal.sample(&mut rng);
            }
        }
    }
    Ok(params)
}

/// The materialized decoder `V` (`N_h x (4m+2)`), never trained.
#[derive(Debug, Clone)]
pub struct FrozenDecoder {
    pub v: DMatrix<f64>,
    pub grid: DyadicGrid,
    pub m: usize,
    pub net: SpectralNet,
}

/// Largest disagreement accepted between `V z` and the network forward pass.
pub const DECODER_TOL: f64 = 1e-12;

impl FrozenDecoder {
    pub fn new(k: u32, m: usize) -> Result<Self> {
        let net = build_psi(k, m)?;
        let v = materialize_linear_map(&net.graph, 4 * m + 2)?;
        let decoder = Self { v, grid: DyadicGrid::new(k)?, m, net };
        // consistency probe with a deterministic non-trivial input
        let z: Vec<Complex64> = (0..2 * m + 1)
            .map(|q| Complex64::new((q as f64 * 0.7).sin(), (q as f64 * 1.3).cos()))
            .collect();
        let direct = decoder.net.eval_real(&z)?;
        let via_v = &decoder.v * DVector::from_vec(to_real_flat(&z));
        let deviation = direct.iter().zip(via_v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if deviation > DECODER_TOL {
            return Err(Error::IllConditioned { residual: deviation, limit: DECODER_TOL });
        }
        Ok(decoder)
    }

    pub fn input_dim(&self) -> usize {
        self.v.ncols()
    }

    /// Nonzero weights of the convolutional decoder.
    pub fn active_weights(&self) -> usize {
        self.net.graph.count_active_weights()
    }

    /// Run the decoder network itself (not `V`) on one coefficient vector.
    pub fn forward_network(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let y = self.net.graph.forward(&Tensor2::row(coeffs.to_vec()))?;
        Ok(y.into_data())
    }
}

/// `V mlp(mu)` for every parameter column.
pub fn model_forward(params: &MLPParams, decoder: &FrozenDecoder, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(params, decoder, inputs.nrows())?;
    Ok(&decoder.v * params.forward(inputs))
}

fn check_dims(params: &MLPParams, decoder: &FrozenDecoder, p: usize) -> Result<()> {
    if params.shape.output != decoder.input_dim() {
        return Err(Error::Shape(format!(
            "dense block emits {} values, decoder expects {}",
            params.shape.output,
            decoder.input_dim()
        )));
    }
    if params.shape.input != p {
        return Err(Error::Shape(format!("dense block takes {} inputs, data has {p}", params.shape.input)));
    }
    Ok(())
}

fn check_data(decoder: &FrozenDecoder, data: &Dataset) -> Result<()> {
    if data.grid != decoder.grid {
        return Err(Error::Shape(format!(
            "data on level {} but decoder on level {}",
            data.grid.level(),
            decoder.grid.level()
        )));
    }
    Ok(())
}

/// `(1/N) sum_i h sum_j |u_i(x_j) - Phi(mu_i)_j|^2`.
pub fn loss(params: &MLPParams, decoder: &FrozenDecoder, data: &Dataset) -> Result<f64> {
    check_data(decoder, data)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = model_forward(params, decoder, &data.inputs)?;
    let h = data.grid.step();
    Ok(h * (pred - &data.targets).norm_squared() / data.len() as f64)
}

/// `max_{i,j} |u_i(x_j) - Phi(mu_i)_j|`.
pub fn test_error(params: &MLPParams, decoder: &FrozenDecoder, data: &Dataset) -> Result<f64> {
    check_data(decoder, data)?;
    if data.is_empty() {
        return Ok(0.0);
    }
    let pred = model_forward(params, decoder, &data.inputs)?;
    Ok((pred - &data.targets).amax())
}

/// Exact gradient of [`loss`] with respect to the flattened dense-block parameters.
pub fn grad(params: &MLPParams, decoder: &FrozenDecoder, data: &Dataset) -> Result<DVector<f64>> {
    Ok(Objective::new(params.shape, decoder, data)?.value_grad(&params.flatten()).1)
}

/// The training objective on flattened parameters.
///
/// With `V = Q R` (orthonormal `Q`) the loss splits into
/// `(h/N) (||R Y - Q^T U||^2 + ||U - Q Q^T U||^2)`, so each evaluation
/// only touches `(4m+2)`-sized matrices.
pub struct Objective<'a> {
    shape: MLPShape,
    data: &'a Dataset,
    r: DMatrix<f64>,
    projected: DMatrix<f64>,
    outside: f64,
    floor: f64,
    scale: f64,
}

impl<'a> Objective<'a> {
    pub fn new(shape: MLPShape, decoder: &FrozenDecoder, data: &'a Dataset) -> Result<Self> {
        check_data(decoder, data)?;
        check_dims(&MLPParams::zeros(shape)?, decoder, data.input_dim())?;
        let v = &decoder.v;
        let qr = v.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let projected = q.tr_mul(&data.targets);
        let outside = (&data.targets - &q * &projected).norm_squared();
        let svd = v.clone().svd(true, true);
        let cutoff = svd.singular_values.max() * 1e-10;
        let best = svd.solve(&data.targets, cutoff).map_err(|e| Error::Solver(e.to_string()))?;
        let floor = (&data.targets - v * best).norm_squared();
        let scale = if data.is_empty() { 0.0 } else { data.grid.step() / data.len() as f64 };
        Ok(Self { shape, data, r, projected, outside, floor, scale })
    }

    pub fn shape(&self) -> MLPShape {
        self.shape
    }

    /// Smallest loss any dense block could reach: the part of the targets the
    /// decoder cannot represent.
    pub fn loss_floor(&self) -> f64 {
        self.scale * self.floor
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.evaluate(x, false).0
    }

    pub fn value_grad(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (f, g) = self.evaluate(x, true);
        (f, g.expect("gradient requested"))
    }

    /// Sign of every hidden pre-activation over the training inputs.
    pub fn activation_pattern(&self, x: &DVector<f64>) -> Vec<bool> {
        let params = MLPParams::from_flat(self.shape, x).expect("objective called with matching length");
        let pre = params.forward_cached(&self.data.inputs);
        pre[..pre.len() - 1].iter().flat_map(|z| z.iter().map(|v| *v < 0.0)).collect()
    }

    fn evaluate(&self, x: &DVector<f64>, with_grad: bool) -> (f64, Option<DVector<f64>>) {
        let params = MLPParams::from_flat(self.shape, x).expect("objective called with matching length");
        let pre = params.forward_cached(&self.data.inputs);
        let y = pre.last().expect("output layer");
        let rd = &self.r * y - &self.projected;
        let value = self.scale * (rd.norm_squared() + self.outside);
        if !with_grad {
            return (value, None);
        }

        let slope = self.shape.slope;
        let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(params.layers.len());
        let mut dz = self.r.tr_mul(&rd) * (2.0 * self.scale);
        for li in (0..params.layers.len()).rev() {
            let a_prev = if li == 0 {
                self.data.inputs.clone()
            } else {
                pre[li - 1].map(|v| leaky(v, slope))
            };
            let dw = &dz * a_prev.transpose();
            let db = dz.column_sum();
            if li > 0 {
                let da = params.layers[li].weight.transpose() * &dz;
                dz = da.zip_map(&pre[li - 1], |g, z| g * leaky_derivative(z, slope));
            }
            grads.push((dw, db));
        }
        grads.reverse();
        let flat = grads
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect::<Vec<_>>();
        (value, Some(DVector::from_vec(flat)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Split;
    use rand::Rng;

    fn tiny_data(k: u32, n: usize, seed: u64) -> Dataset {
        let grid = DyadicGrid::new(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = DMatrix::from_fn(2, n, |_, _| rng.random_range(0.0..1.0));
        let targets = DMatrix::from_fn(grid.len(), n, |j, i| {
            let x = grid.node(j);
            (inputs[(0, i)] * x).sin() + inputs[(1, i)] * x * x
        });
        Dataset::new(inputs, targets, grid, Split::Train).unwrap()
    }

    #[test]
    fn he_init_is_deterministic_and_scaled() {
        let shape = MLPShape { input: 50, width: 200, depth: 1, output: 6, slope: 0.01 };
        let a = init_he(shape, 4).unwrap();
        assert_eq!(a, init_he(shape, 4).unwrap());
        assert_ne!(a, init_he(shape, 5).unwrap());
        // 50 x 200 = 10000 entries with variance 2/50
        let w = &a.layers[0].weight;
        let mean = w.mean();
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        assert!((var / (2.0 / 50.0) - 1.0).abs() < 0.1, "variance {var}");
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn flatten_round_trip() {
        let shape = MLPShape::for_modes(3, 4, 2, 2);
        let p = init_he(shape, 1).unwrap();
        assert_eq!(p.flatten().len(), shape.num_params());
        assert_eq!(MLPParams::from_flat(shape, &p.flatten()).unwrap(), p);
        assert_eq!(shape.num_params(), 4 * 4 + 5 * 4 + 5 * 10);
    }

    #[test]
    fn zero_weights_emit_last_bias() {
        let shape = MLPShape::for_modes(2, 3, 2, 1);
        let decoder = FrozenDecoder::new(3, 1).unwrap();
        let mut p = MLPParams::zeros(shape).unwrap();
        p.layers[2].bias = DVector::from_vec(vec![0.5, 0.0, 0.25, -0.1, 0.0, 0.3]);
        let out = model_forward(&p, &decoder, &DMatrix::from_element(2, 1, 0.7)).unwrap();
        let expect = &decoder.v * &p.layers[2].bias;
        assert_eq!(out.column(0), expect.column(0));
    }

    #[test]
    fn tiny_net_matches_hand_computation() {
        let shape = MLPShape { input: 1, width: 2, depth: 1, output: 2, slope: 0.01 };
        let mut p = MLPParams::zeros(shape).unwrap();
        p.layers[0].weight = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        p.layers[0].bias = DVector::from_vec(vec![0.5, 0.5]);
        p.layers[1].weight = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 3.0]);
        p.layers[1].bias = DVector::from_vec(vec![0.0, -1.0]);
        let y = p.forward(&DMatrix::from_element(1, 1, 1.0));
        // hidden: [1.5, -1.5] -> [1.5, -0.015]
        assert!((y[(0, 0)] - 1.485).abs() < 1e-15);
        assert!((y[(1, 0)] - (-0.045 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn decoder_matches_network_forward() {
        let decoder = FrozenDecoder::new(4, 3).unwrap();
        let shape = MLPShape::for_modes(2, 5, 2, 3);
        let p = init_he(shape, 9).unwrap();
        let data = tiny_data(4, 6, 2);
        let coeffs = p.forward(&data.inputs);
        let via_v = model_forward(&p, &decoder, &data.inputs).unwrap();
        for i in 0..data.len() {
            let col: Vec<f64> = coeffs.column(i).iter().copied().collect();
            let direct = decoder.forward_network(&col).unwrap();
            for (a, b) in direct.iter().zip(via_v.column(i).iter()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_error_loss() {
        let k = 4;
        let decoder = FrozenDecoder::new(k, 2).unwrap();
        let p = MLPParams::zeros(MLPShape::for_modes(1, 2, 1, 2)).unwrap();
        let grid = DyadicGrid::new(k).unwrap();
        let e = 0.3;
        let data = Dataset::new(DMatrix::zeros(1, 1), DMatrix::from_element(grid.len(), 1, e), grid, Split::Train).unwrap();
        let h = grid.step();
        let expect = e * e * (1.0 + h);
        assert!((loss(&p, &decoder, &data).unwrap() - expect).abs() < 1e-15);
        let objective = Objective::new(p.shape, &decoder, &data).unwrap();
        assert!((objective.value(&p.flatten()) - expect).abs() < 1e-13);
        assert!((test_error(&p, &decoder, &data).unwrap() - e).abs() < 1e-15);
    }

    #[test]
    fn objective_agrees_with_direct_loss() {
        let decoder = FrozenDecoder::new(5, 4).unwrap();
        let data = tiny_data(5, 12, 8);
        let p = init_he(MLPShape::for_modes(2, 6, 3, 4), 3).unwrap();
        let direct = loss(&p, &decoder, &data).unwrap();
        let objective = Objective::new(p.shape, &decoder, &data).unwrap();
        assert!((objective.value(&p.flatten()) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let decoder = FrozenDecoder::new(4, 3).unwrap();
        let data = tiny_data(4, 9, 5);
        let shape = MLPShape::for_modes(2, 5, 3, 3);
        let p = init_he(shape, 11).unwrap();
        let objective = Objective::new(shape, &decoder, &data).unwrap();
        let x = p.flatten();
        let g = grad(&p, &decoder, &data).unwrap();
        let worst = super::super::max_fd_relative_error(&objective, &x, &g, 50, 17);
        assert!(worst <= 1e-5, "{worst}");
    }

    #[test]
    fn exact_fit_has_zero_loss_and_gradient() {
        let decoder = FrozenDecoder::new(3, 2).unwrap();
        let mut data = tiny_data(3, 4, 1);
        let p = init_he(MLPShape::for_modes(2, 3, 2, 2), 2).unwrap();
        data.targets = model_forward(&p, &decoder, &data.inputs).unwrap();
        assert_eq!(loss(&p, &decoder, &data).unwrap(), 0.0);
        assert_eq!(test_error(&p, &decoder, &data).unwrap(), 0.0);
        assert!(grad(&p, &decoder, &data).unwrap().amax() < 1e-13);
    }

    #[test]
    fn loss_ignores_sample_order() {
        let decoder = FrozenDecoder::new(3, 2).unwrap();
        let data = tiny_data(3, 5, 4);
        let p = init_he(MLPShape::for_modes(2, 3, 2, 2), 6).unwrap();
        let order = [3, 0, 4, 1, 2];
        let mut shuffled = data.clone();
        for (to, &from) in order.iter().enumerate() {
            shuffled.inputs.set_column(to, &data.inputs.column(from));
            shuffled.targets.set_column(to, &data.targets.column(from));
        }
        let (a, b) = (loss(&p, &decoder, &data).unwrap(), loss(&p, &decoder, &shuffled).unwrap());
        assert!((a - b).abs() <= 1e-15 * a);
    }
}
