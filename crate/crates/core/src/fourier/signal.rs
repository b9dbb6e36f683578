use std::fmt;
use std::sync::Arc;

/// A scalar function of one variable.
pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real signal on `[0, 1]` with a smoothness index, analytic derivative
/// evaluators for as many orders as are known, and the abscissae of its
/// non-smooth points.
///
/// Orders beyond the analytic ones fall back to finite differences of the
/// highest analytic derivative.
#[derive(Clone)]
pub struct SobolevSignal {
    name: String,
    smoothness: usize,
    derivs: Vec<Func>,
    kinks: Vec<f64>,
}

impl fmt::Debug for SobolevSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SobolevSignal")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness)
            .field("analytic_orders", &self.derivs.len())
            .field("kinks", &self.kinks)
            .finish()
    }
}

/// Base finite-difference step for a first derivative.
pub const FD_STEP: f64 = 1e-5;

impl SobolevSignal {
    /// `derivs[r]` evaluates the `r`-th derivative; at least the value must be given.
    pub fn new(name: impl Into<String>, smoothness: usize, derivs: Vec<Func>) -> Self {
        assert!(!derivs.is_empty(), "a signal needs at least a value evaluator");
        assert!(smoothness >= 1, "smoothness index must be >= 1");
        Self { name: name.into(), smoothness, derivs, kinks: Vec::new() }
    }

    pub fn with_kinks(mut self, kinks: impl IntoIterator<Item = f64>) -> Self {
        self.kinks.extend(kinks);
        self.kinks.retain(|c| (0.0..=1.0).contains(c));
        self.kinks.sort_by(f64::total_cmp);
        self.kinks.dedup();
        self
    }

    pub fn with_smoothness(mut self, s: usize) -> Self {
        assert!(s >= 1);
        self.smoothness = s;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn analytic_orders(&self) -> usize {
        self.derivs.len()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.derivs[0])(x)
    }

    /// `order`-th derivative at `x`; central differences in the interior,
    /// one-sided near the endpoints of `[0, 1]` when no analytic evaluator exists.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        if let Some(d) = self.derivs.get(order) {
            return d(x);
        }
        let base = self.derivs.len() - 1;
        let extra = order - base;
        fd_derivative(&*self.derivs[base], extra, x)
    }

    /// Evaluator for the `order`-th derivative (analytic or finite difference).
    pub fn derivative_fn(&self, order: usize) -> Func {
        if let Some(d) = self.derivs.get(order) {
            return d.clone();
        }
        let base = self.derivs[self.derivs.len() - 1].clone();
        let extra = order - (self.derivs.len() - 1);
        Arc::new(move |x| fd_derivative(&*base, extra, x))
    }

    /// `a f + b g` with the union of kinks. Orders known analytically for only
    /// one operand use the other's finite-difference evaluator.
    pub fn combine(a: f64, f: &SobolevSignal, b: f64, g: &SobolevSignal) -> SobolevSignal {
        let orders = f.derivs.len().max(g.derivs.len());
        let derivs = (0..orders)
            .map(|r| {
                let (fr, gr) = (f.derivative_fn(r), g.derivative_fn(r));
                Arc::new(move |x: f64| a * fr(x) + b * gr(x)) as Func
            })
            .collect();
        SobolevSignal::new(
            format!("{a}*{}+{b}*{}", f.name, g.name),
            f.smoothness.min(g.smoothness),
            derivs,
        )
        .with_kinks(f.kinks.iter().chain(&g.kinks).copied())
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(&[c])
    }

    /// `sum_i coeffs[i] x^i`, with all derivatives analytic.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let degree = coeffs.len().saturating_sub(1);
        let derivs = (0..=degree + 1)
            .map(|r| {
                let c = poly_derivative(coeffs, r);
                Arc::new(move |x: f64| poly_eval(&c, x)) as Func
            })
            .collect();
        Self::new(format!("poly{coeffs:?}"), degree + 1, derivs)
    }

    /// `|x - c|`; belongs to `H^1`.
    pub fn abs_shift(c: f64) -> Self {
        Self::power_kink(c, 1.0, 1).with_name(format!("abs_shift({c})"))
    }

    /// `|x|^{3/2}` on `[0, 1]`.
    pub fn x_pow_3_2() -> Self {
        Self::power_kink(0.0, 1.5, 2).with_name("x_pow_3_2")
    }

    /// `|x - c|^p` with analytic derivatives through order `ceil(p)`.
    pub fn power_kink(c: f64, p: f64, smoothness: usize) -> Self {
        let orders = p.ceil() as usize + 1;
        let derivs = (0..orders)
            .map(|r| {
                Arc::new(move |x: f64| {
                    let d = x - c;
                    let falling: f64 = (0..r).map(|i| p - i as f64).product();
                    if falling == 0.0 {
                        return 0.0;
                    }
                    let sign = if d < 0.0 && r % 2 == 1 { -1.0 } else { 1.0 };
                    falling * sign * d.abs().powf(p - r as f64)
                }) as Func
            })
            .collect();
        Self::new(format!("abs_pow({c},{p})"), smoothness, derivs).with_kinks([c])
    }

    fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

fn poly_derivative(coeffs: &[f64], r: usize) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(r)
        .map(|(i, c)| c * ((i - r + 1)..=i).map(|v| v as f64).product::<f64>())
        .collect()
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `order`-th derivative by repeated differences. The step grows with the
/// order so that rounding noise stays below the truncation error.
fn fd_derivative(f: &(dyn Fn(f64) -> f64 + Send + Sync), order: usize, x: f64) -> f64 {
    if order == 0 {
        return f(x);
    }
    let h = FD_STEP * 10f64.powi(order as i32 - 1);
    let reach = order as f64 * h;
    // binomial weights of the order-th difference
    let weights: Vec<f64> = (0..=order)
        .map(|i| {
            let binom: f64 = (0..i).map(|t| (order - t) as f64 / (t + 1) as f64).product();
            if (order - i) % 2 == 0 {
                binom
            } else {
                -binom
            }
        })
        .collect();
    let start = if x - reach / 2.0 < 0.0 {
        x
    } else if x + reach / 2.0 > 1.0 {
        x - reach
    } else {
        x - reach / 2.0
    };
    weights.iter().enumerate().map(|(i, w)| w * f(start + i as f64 * h)).sum::<f64>()
        / h.powi(order as i32)
}
