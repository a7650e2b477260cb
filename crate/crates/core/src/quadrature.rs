//! Gauss–Legendre rules and a graded composite rule on `(0, 1)` for
//! integrands with integrable endpoint singularities.

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed composite rule: flat list of nodes and weights.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Gauss–Legendre of order `order` on each cell `[b_i, b_{i+1}]`.
    pub fn from_breakpoints(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * breaks.len());
        let mut weights = Vec::with_capacity(order * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    /// Rule on one period `(-1/2, 1/2)` with cells shrinking geometrically
    /// (ratio 1/4) toward `0` from both sides down to width ~1e-18, and
    /// uniform cells of width 1/16 away from it. Centering the period on the
    /// singular point keeps nodes next to it exactly representable.
    pub fn graded_period(order: usize) -> Self {
        const LEVELS: i32 = 30;
        let mut right = Vec::new();
        for i in (2..=LEVELS).rev() {
            right.push(0.25f64.powi(i));
        }
        for i in 1..=8 {
            right.push(i as f64 / 16.0);
        }
        let mut breaks: Vec<f64> = right.iter().rev().map(|x| -x).collect();
        breaks.push(0.0);
        breaks.extend(right);
        Self::from_breakpoints(&breaks, order)
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, mut f: impl FnMut(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Gauss–Legendre with `order` points on `[a, b]`.
pub fn integrate_gl(a: f64, b: f64, order: usize, f: impl FnMut(f64) -> f64) -> f64 {
    CompositeRule::from_breakpoints(&[a, b], order).integrate(f)
}
