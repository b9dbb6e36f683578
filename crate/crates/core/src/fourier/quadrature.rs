//! Composite Gauss–Legendre rules on `[0, 1]` that respect break points.

/// Points per panel.
pub const POINTS_PER_PANEL: usize = 8;
/// Geometric refinement levels toward every break point.
const GRADING_LEVELS: usize = 30;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A quadrature rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// About `panels` uniform panels, split at `breaks`, with geometric grading
    /// toward every break point and both endpoints.
    pub fn composite(panels: usize, breaks: &[f64]) -> Self {
        Self::composite_split(panels, breaks, 1)
    }

    /// [`QuadRule::composite`] with every panel cut into `split` equal parts.
    pub fn composite_split(panels: usize, breaks: &[f64], split: usize) -> Self {
        let mut points: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|b| *b > 0.0 && *b < 1.0)
            .chain([0.0, 1.0])
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();

        let mut edges = Vec::new();
        for seg in points.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let count = ((b - a) * panels as f64).ceil().max(2.0) as usize;
            let width = (b - a) / count as f64;
            // graded first panel [a, a + width]
            for level in (1..=GRADING_LEVELS).rev() {
                edges.push((a + width * (-(level as f64)).exp2(), a + width * (1.0 - level as f64).exp2()));
            }
            edges.push((a, a + width * (-(GRADING_LEVELS as f64)).exp2()));
            for i in 1..count - 1 {
                edges.push((a + i as f64 * width, a + (i + 1) as f64 * width));
            }
            // graded last panel [b - width, b]
            for level in (1..=GRADING_LEVELS).rev() {
                edges.push((b - width * (1.0 - level as f64).exp2(), b - width * (-(level as f64)).exp2()));
            }
            edges.push((b - width * (-(GRADING_LEVELS as f64)).exp2(), b));
        }

        let (gx, gw) = gauss_legendre(POINTS_PER_PANEL);
        let mut nodes = Vec::with_capacity(edges.len() * split.max(1) * POINTS_PER_PANEL);
        let mut weights = Vec::with_capacity(edges.len() * split.max(1) * POINTS_PER_PANEL);
        let split = split.max(1);
        let pieces = edges.into_iter().flat_map(|(a, b)| {
            let w = (b - a) / split as f64;
            (0..split).map(move |i| (a + i as f64 * w, a + (i + 1) as f64 * w))
        });
        for (a, b) in pieces {
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_handles_kinks_and_singular_endpoints() {
        let rule = QuadRule::composite(64, &[0.3]);
        let kinked = rule.integrate(|x| (x - 0.3f64).abs());
        assert!((kinked - (0.09 + 0.49) / 2.0).abs() < 1e-14);
        let root = rule.integrate(f64::sqrt);
        assert!((root - 2.0 / 3.0).abs() < 1e-13);
        let weights: f64 = rule.weights.iter().sum();
        assert!((weights - 1.0).abs() < 1e-14);
    }
}
