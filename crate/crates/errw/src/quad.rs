//! One-dimensional quadrature rules.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre on [lo, hi].
pub fn on_interval(n: usize, lo: f64, hi: f64) -> Rule {
    let g = gauss_legendre(n);
    let h = 0.5 * (hi - lo);
    let m = 0.5 * (hi + lo);
    Rule {
        nodes: g.nodes.iter().map(|&t| m + h * t).collect(),
        weights: g.weights.iter().map(|&w| w * h).collect(),
    }
}

/// Gauss–Legendre in s for x = center + beta·sinh(s), covering [lo, hi].
/// Nodes cluster near `center` and thin out in the tails.
pub fn sinh_mapped(n: usize, lo: f64, hi: f64, center: f64, beta: f64) -> Rule {
    let s_lo = ((lo - center) / beta).asinh();
    let s_hi = ((hi - center) / beta).asinh();
    let g = on_interval(n, s_lo, s_hi);
    Rule {
        nodes: g.nodes.iter().map(|&s| center + beta * s.sinh()).collect(),
        weights: g.nodes.iter().zip(&g.weights).map(|(&s, &w)| w * beta * s.cosh()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for n in [1, 2, 5, 8, 20, 64] {
            let g = gauss_legendre(n);
            assert!((g.weight_sum() - 2.0).abs() < 1e-13);
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = g.integrate(|x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg}: {got} vs {exact}");
            }
            for w in g.nodes.windows(2) {
                assert!(w[0] < w[1]);
            }
            for k in 0..n {
                assert_eq!(g.nodes[k], -g.nodes[n - 1 - k]);
            }
        }
    }

    #[test]
    fn mapped_rules() {
        let r = on_interval(10, 1.0, 3.0);
        assert!((r.integrate(|x| x * x) - 26.0 / 3.0).abs() < 1e-12);
        let s = sinh_mapped(64, -30.0, 30.0, 0.0, 2.0);
        let gauss = s.integrate(|x| (-0.5 * x * x).exp());
        assert!((gauss - (2.0 * PI).sqrt()).abs() < 1e-8);
        assert!((s.integrate(|_| 1.0) - 60.0).abs() < 1e-6);
    }
}
