//! Gauss-Legendre rules.

use num_complex::Complex64;

/// Nodes and weights of an n-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A Gauss-Legendre rule repeated over equal panels.
#[derive(Debug, Clone)]
pub struct CompositeGaussLegendre {
    rule: GaussLegendre,
    panels: usize,
}

impl CompositeGaussLegendre {
    pub fn new(panels: usize, order: usize) -> Self {
        assert!(panels >= 1);
        Self { rule: GaussLegendre::new(order), panels }
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.panels * self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// Absolute nodes and weights on `[a, b]`, in increasing order.
    pub fn nodes_weights(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / self.panels as f64;
        let mut xs = Vec::with_capacity(self.len());
        let mut ws = Vec::with_capacity(self.len());
        for p in 0..self.panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (xs, ws) = self.nodes_weights(a, b);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, a: f64, b: f64, f: F) -> Complex64 {
        let (xs, ws) = self.nodes_weights(a, b);
        xs.iter().zip(&ws).map(|(&x, &w)| f(x) * w).sum()
    }
}

/// Pairwise summation, deterministic for a given input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
