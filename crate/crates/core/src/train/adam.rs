use nalgebra::DVector;

use super::{OptimResult, StopReason, TraceRow, TrainConfig};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with bias-corrected moment estimates and a fixed learning rate.
///
/// Keeps the best iterate seen, so the returned value never exceeds the first.
pub fn optimize_adam<F>(x0: DVector<f64>, mut f: F, config: &TrainConfig) -> OptimResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut m, mut v) = (DVector::zeros(n), DVector::zeros(n));
    let (mut fx, mut g) = f(&x);
    let mut trace = vec![TraceRow { iter: 0, loss: fx, grad_norm: g.norm() }];
    let mut best = (x.clone(), fx, g.clone());
    let mut reason = StopReason::MaxIterations;

    for iter in 1..=config.max_iter {
        if !fx.is_finite() {
            reason = StopReason::NonFinite;
            break;
        }
        if g.amax() <= config.grad_tol {
            reason = StopReason::GradientTolerance;
            break;
        }
        m = m * BETA1 + &g * (1.0 - BETA1);
        v = v * BETA2 + g.component_mul(&g) * (1.0 - BETA2);
        let c1 = 1.0 - BETA1.powi(iter as i32);
        let c2 = 1.0 - BETA2.powi(iter as i32);
        x -= m.zip_map(&v, |mi, vi| config.learning_rate * (mi / c1) / ((vi / c2).sqrt() + EPSILON));
        (fx, g) = f(&x);
        trace.push(TraceRow { iter, loss: fx, grad_norm: g.norm() });
        if fx < best.1 {
            best = (x.clone(), fx, g.clone());
        }
    }
    let evals = trace.len();
    let (x, fx, g) = best;
    OptimResult::new(x, fx, g, trace, evals, 0, reason)
}
