use spectral_cnn::fourier::{operator_t, truncated_series_eval, SobolevSignal};
use spectral_cnn::problems::{BenchmarkOperator, Dataset, Split};
use spectral_cnn::spectral::{build_psi, DyadicGrid};
use spectral_cnn::train::{init_he, loss, test_error, train_ensemble, FrozenDecoder, MLPShape, TrainConfig};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn decoder_of_coefficients_recovers_the_signal() {
    let k = 6;
    let f = SobolevSignal::abs_shift(0.3);
    let nodes = DyadicGrid::new(k).unwrap().nodes();
    let exact: Vec<f64> = nodes.iter().map(|&x| f.eval(x)).collect();

    let mut errors = Vec::new();
    for m in [8, 32] {
        let z = operator_t(&f, m).unwrap();
        let out = build_psi(k, m).unwrap().eval_real(z.as_slice()).unwrap();
        // the decoder reads the second half of the folded period
        let series: Vec<f64> = nodes.iter().map(|&x| truncated_series_eval(&z, (x + 1.0) / 2.0).re).collect();
        assert!(max_abs_diff(&out, &series) < 1e-12);
        errors.push(max_abs_diff(&out, &exact));
    }
    assert!(errors[1] < errors[0] / 2.0, "{errors:?}");
}

#[test]
fn training_fits_the_benchmark_operator() {
    let grid = DyadicGrid::new(5).unwrap();
    let op = BenchmarkOperator::new();
    let train = op.dataset(40, grid, 1, Split::Train).unwrap();
    let test = op.dataset(20, grid, 2, Split::Test).unwrap();
    let (m, shape) = (4, MLPShape::for_modes(3, 10, 3, 4));
    let decoder = FrozenDecoder::new(5, m).unwrap();

    let initial = loss(&init_he(shape, 0).unwrap(), &decoder, &train).unwrap();
    let config = TrainConfig { max_iter: 300, restarts: 2, ..TrainConfig::default() };
    let ensemble = train_ensemble(shape, &decoder, &train, &config).unwrap();
    let best = ensemble.best_member();
    assert!(ensemble.members.iter().all(|m| best.final_loss() <= m.final_loss()));

    let trained = loss(ensemble.best_params(), &decoder, &train).unwrap();
    assert!((trained - best.final_loss()).abs() <= 1e-10 * initial);
    assert!(trained < initial / 100.0, "{initial} -> {trained}");
    let err = test_error(ensemble.best_params(), &decoder, &test).unwrap();
    assert!(err.is_finite() && err < 1.0, "{err}");
}

#[test]
fn datasets_survive_a_round_trip() {
    let grid = DyadicGrid::new(4).unwrap();
    let data = BenchmarkOperator::new().dataset(7, grid, 3, Split::Train).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    data.save(&path).unwrap();
    let back = Dataset::load(&path, Split::Train).unwrap();
    assert_eq!(back.inputs, data.inputs);
    assert_eq!(back.targets, data.targets);
    assert_eq!(back.grid, data.grid);
}
