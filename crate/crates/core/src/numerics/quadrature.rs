//! Gauss-Legendre rules mapped to finite intervals.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of an `order`-point Gauss-Legendre rule on `(a, b)`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn gauss_legendre(a: f64, b: f64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::domain("quadrature order must be positive"));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::domain(format!("invalid quadrature interval ({a}, {b})")));
        }
        let (x, w) = legendre_rule(order);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Ok(Self {
            a,
            b,
            nodes: x.iter().map(|&t| mid + half * t).collect(),
            weights: w.iter().map(|&v| half * v).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Same interval, twice the number of nodes.
    pub fn doubled(&self) -> Self {
        Self::gauss_legendre(self.a, self.b, 2 * self.order()).expect("valid grid")
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Nodes (ascending) and weights on [-1, 1], by Newton iteration on P_n.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
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
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
