//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::{OptimResult, StopReason, TraceRow, TrainConfig};

/// A point on the search line: step, value, directional derivative, gradient.
#[derive(Clone)]
struct LinePoint {
    alpha: f64,
    f: f64,
    slope: f64,
    grad: DVector<f64>,
}

/// Outcome of a line search.
enum Search {
    Found(LinePoint),
    Failed,
}

/// Minimise `f` from `x0`; `f` returns the value and gradient.
///
/// Accepted objective values never increase. When the strong-Wolfe search
/// fails, a backtracking steepest-descent step is tried and the curvature
/// history is cleared.
pub fn optimize_lbfgs<F>(x0: DVector<f64>, mut f: F, config: &TrainConfig) -> OptimResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut evals = 1;
    let mut trace = vec![TraceRow { iter: 0, loss: fx, grad_norm: g.norm() }];
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::with_capacity(config.history);
    let mut failures = 0;

    if !fx.is_finite() {
        return OptimResult::new(x, fx, g, trace, evals, failures, StopReason::NonFinite);
    }

    let mut reason = StopReason::MaxIterations;
    for iter in 1..=config.max_iter {
        if g.amax() <= config.grad_tol {
            reason = StopReason::GradientTolerance;
            break;
        }

        let mut d = two_loop(&g, &history);
        let mut slope0 = g.dot(&d);
        if !(slope0 < 0.0) {
            history.clear();
            d = -&g;
            slope0 = -g.norm_squared();
        }
        // first step scaled so that the trial point stays O(1) away
        let alpha0 = if history.is_empty() { (1.0 / g.lp_norm(1)).min(1.0) } else { 1.0 };

        let accepted = match strong_wolfe(&mut f, &x, fx, slope0, &d, alpha0, config, &mut evals) {
            Search::Found(p) => Some((p, d)),
            Search::Failed => {
                failures += 1;
                history.clear();
                let d = -&g;
                backtrack(&mut f, &x, fx, &d, -g.norm_squared(), (1.0 / g.lp_norm(1)).min(1.0), config, &mut evals)
                    .map(|p| (p, d))
            }
        };
        let Some((p, d)) = accepted else {
            reason = StopReason::LineSearchFailed;
            break;
        };

        let s = &d * p.alpha;
        let y = &p.grad - &g;
        let sy = s.dot(&y);
        let change = fx - p.f;
        x += &s;
        fx = p.f;
        g = p.grad;
        trace.push(TraceRow { iter, loss: fx, grad_norm: g.norm() });

        if sy > 1e-10 * s.norm() * y.norm() {
            if history.len() == config.history {
                history.pop_front();
            }
            history.push_back((s.clone(), y, 1.0 / sy));
        }
        if change <= config.loss_tol * fx.abs().max(1.0) || s.amax() <= 1e-15 * x.amax().max(1.0) {
            reason = StopReason::Stalled;
            break;
        }
    }
    if g.amax() <= config.grad_tol {
        reason = StopReason::GradientTolerance;
    }
    OptimResult::new(x, fx, g, trace, evals, failures, reason)
}

/// `-H g` with the implicit inverse-Hessian approximation.
fn two_loop(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.norm_squared();
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    -q
}

fn probe<F>(f: &mut F, x: &DVector<f64>, d: &DVector<f64>, alpha: f64, evals: &mut usize) -> LinePoint
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    *evals += 1;
    let (fa, ga) = f(&(x + d * alpha));
    LinePoint { alpha, f: fa, slope: ga.dot(d), grad: ga }
}

#[allow(clippy::too_many_arguments)]
fn strong_wolfe<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    d: &DVector<f64>,
    alpha0: f64,
    config: &TrainConfig,
    evals: &mut usize,
) -> Search
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let (c1, c2) = (config.c1, config.c2);
    let armijo = |p: &LinePoint| p.f.is_finite() && p.f <= f0 + c1 * p.alpha * slope0;
    let curvature = |p: &LinePoint| p.slope.abs() <= -c2 * slope0;

    let mut prev = LinePoint { alpha: 0.0, f: f0, slope: slope0, grad: DVector::zeros(0) };
    let mut alpha = alpha0;
    for i in 0..config.max_line_search {
        let cur = probe(f, x, d, alpha, evals);
        if !armijo(&cur) || (i > 0 && cur.f >= prev.f) {
            return zoom(f, x, f0, slope0, d, prev, cur, config, evals);
        }
        if curvature(&cur) {
            return Search::Found(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(f, x, f0, slope0, d, cur, prev, config, evals);
        }
        alpha = (cur.alpha * 4.0).min(interpolate(&prev, &cur).unwrap_or(f64::INFINITY).max(cur.alpha * 1.1));
        prev = cur;
    }
    Search::Failed
}

/// Bracket `[lo, hi]` (unordered) holding a point satisfying the strong Wolfe conditions.
#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    d: &DVector<f64>,
    mut lo: LinePoint,
    mut hi: LinePoint,
    config: &TrainConfig,
    evals: &mut usize,
) -> Search
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    for _ in 0..config.max_line_search {
        let width = hi.alpha - lo.alpha;
        if width.abs() <= 1e-16 * lo.alpha.abs().max(1e-300) {
            break;
        }
        // cubic step, kept away from the bracket ends
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let margin = 0.1 * (b - a);
        let alpha = match interpolate(&lo, &hi) {
            Some(t) if hi.f.is_finite() && t > a + margin && t < b - margin => t,
            _ => 0.5 * (a + b),
        };
        let cur = probe(f, x, d, alpha, evals);
        if !(cur.f.is_finite() && cur.f <= f0 + config.c1 * alpha * slope0) || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.slope.abs() <= -config.c2 * slope0 {
                return Search::Found(cur);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // the bracket collapsed; a point with sufficient decrease is still progress
    if lo.alpha > 0.0 && lo.f < f0 {
        Search::Found(lo)
    } else {
        Search::Failed
    }
}

/// Minimiser of the cubic matching value and slope at both points.
fn interpolate(p: &LinePoint, q: &LinePoint) -> Option<f64> {
    let d1 = p.slope + q.slope - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.slope * q.slope;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (q.alpha - p.alpha).signum() * disc.sqrt();
    let t = q.alpha - (q.alpha - p.alpha) * (q.slope + d2 - d1) / (q.slope - p.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Armijo backtracking along `d`; `None` when no step decreases `f`.
#[allow(clippy::too_many_arguments)]
fn backtrack<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    d: &DVector<f64>,
    slope0: f64,
    alpha0: f64,
    config: &TrainConfig,
    evals: &mut usize,
) -> Option<LinePoint>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut alpha = alpha0;
    for _ in 0..60 {
        let p = probe(f, x, d, alpha, evals);
        if p.f.is_finite() && p.f <= f0 + config.c1 * alpha * slope0 && p.f < f0 {
            return Some(p);
        }
        alpha *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(max_iter: usize) -> TrainConfig {
        TrainConfig { max_iter, grad_tol: 1e-12, loss_tol: 0.0, ..TrainConfig::default() }
    }

    fn rosenbrock(x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = DVector::from_vec(vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]);
        (f, g)
    }

    #[test]
    fn quadratic_converges_fast() {
        let a = DVector::from_vec(vec![1.0, -2.0, 3.5, 0.25]);
        let res = optimize_lbfgs(
            DVector::zeros(4),
            |x| ((x - &a).norm_squared(), (x - &a) * 2.0),
            &config(5),
        );
        assert!((res.x - a).amax() <= 1e-10);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let res = optimize_lbfgs(DVector::from_vec(vec![-1.2, 1.0]), rosenbrock, &config(200));
        assert!((res.x[0] - 1.0).abs() <= 1e-6 && (res.x[1] - 1.0).abs() <= 1e-6, "{:?}", res.x);
        assert!(res.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        assert!(res.trace.len() <= 201);
    }

    #[test]
    fn ill_scaled_quadratic() {
        let scales = DVector::from_vec(vec![1.0, 10.0, 100.0, 1e3, 1e4]);
        let res = optimize_lbfgs(
            DVector::from_element(5, 1.0),
            |x| (x.component_mul(&scales).dot(x), x.component_mul(&scales) * 2.0),
            &config(200),
        );
        assert!(res.x.amax() < 1e-8, "{:?}", res.x);
    }

    #[test]
    fn nonsmooth_objective_stays_monotone() {
        // |x| + |y| has kinks where Wolfe searches can fail
        let res = optimize_lbfgs(
            DVector::from_vec(vec![0.7, -1.3]),
            |x| {
                let g = x.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
                (x.abs().sum(), g)
            },
            &config(100),
        );
        assert!(res.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        assert!(res.value < 2.0);
    }
}
