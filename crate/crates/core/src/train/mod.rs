//! The trainable dense block: He-initialised leaky-ReLU MLP, exact gradients of
//! the discrete `L^2` loss against a frozen decoder, and the optimizers.

mod adam;
mod ensemble;
mod lbfgs;
mod mlp;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::optimize_adam;
pub use ensemble::{train_ensemble, train_single, write_traces, Ensemble, Member};
pub use lbfgs::optimize_lbfgs;
pub use mlp::{
    grad, init_he, loss, model_forward, test_error, Affine, FrozenDecoder, MLPParams, MLPShape, Objective,
    DECODER_TOL,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Lbfgs,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub max_iter: usize,
    /// L-BFGS curvature pairs kept.
    pub history: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Trial points per line search.
    pub max_line_search: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop when the largest gradient entry drops below this.
    pub grad_tol: f64,
    /// Stop when an accepted step lowers the loss by less than this (relative).
    pub loss_tol: f64,
    /// Adam step size.
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Lbfgs,
            max_iter: 1000,
            history: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            restarts: 1,
            seed: 0,
            grad_tol: 1e-9,
            loss_tol: 1e-12,
            learning_rate: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Config(format!("need 0 < c1 < c2 < 1, got {} and {}", self.c1, self.c2)));
        }
        if self.optimizer == Optimizer::Lbfgs && self.history == 0 {
            return Err(Error::Config("L-BFGS history must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    Stalled,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad: DVector<f64>,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
    /// Strong-Wolfe searches that fell back to steepest descent.
    pub line_search_failures: usize,
    pub reason: StopReason,
}

impl OptimResult {
    fn new(
        x: DVector<f64>,
        value: f64,
        grad: DVector<f64>,
        trace: Vec<TraceRow>,
        evaluations: usize,
        line_search_failures: usize,
        reason: StopReason,
    ) -> Self {
        Self { x, value, grad, trace, evaluations, line_search_failures, reason }
    }
}

/// Dispatch on `config.optimizer`.
pub fn optimize<F>(x0: DVector<f64>, f: F, config: &TrainConfig) -> OptimResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    match config.optimizer {
        Optimizer::Lbfgs => optimize_lbfgs(x0, f, config),
        Optimizer::Adam => optimize_adam(x0, f, config),
    }
}

/// Central-difference step for gradient checks.
pub const FD_CHECK_STEP: f64 = 1e-6;

/// Relative disagreement `||g_S - fd_S|| / max(||g_S||, ||fd_S||)` between the
/// analytic gradient `g` and central differences on `count` random coordinates `S`.
///
/// Coordinates whose stencil changes the leaky-ReLU activation pattern are
/// replaced by the next random coordinate.
pub fn max_fd_relative_error(objective: &Objective<'_>, x: &DVector<f64>, g: &DVector<f64>, count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = rand::seq::index::sample(&mut rng, x.len(), x.len());
    let pattern = objective.activation_pattern(x);
    let (mut diff, mut norm_g, mut norm_fd) = (0.0, 0.0, 0.0);
    let mut used = 0;
    for i in order {
        if used == count {
            break;
        }
        let h = FD_CHECK_STEP * x[i].abs().max(1.0);
        let mut xp = x.clone();
        xp[i] += h;
        if objective.activation_pattern(&xp) != pattern {
            continue;
        }
        let fp = objective.value(&xp);
        xp[i] = x[i] - h;
        if objective.activation_pattern(&xp) != pattern {
            continue;
        }
        let fm = objective.value(&xp);
        let fd = (fp - fm) / (2.0 * h);
        diff += (g[i] - fd).powi(2);
        norm_g += g[i] * g[i];
        norm_fd += fd * fd;
        used += 1;
    }
    let scale = norm_g.max(norm_fd).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}
