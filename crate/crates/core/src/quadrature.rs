//! Gauss–Legendre and Gauss–Lobatto rules normalized to the unit interval.

use crate::error::{Error, Result};

/// Nodes in `[0, 1]` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over `[0, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Maps a rule on `[-1, 1]` with weights summing to two onto `[0, 1]`.
    fn from_symmetric(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        Self { nodes, weights }
    }
}

pub const MAX_RULE_POINTS: usize = 6;

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    if n == 0 {
        return (p_prev, 0.0);
    }
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `n`-point Gauss–Legendre rule, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_RULE_POINTS {
        return Err(Error::UnsupportedQuadrature(n));
    }
    let nf = n as f64;
    let pairs = (0..n)
        .map(|i| {
            let derivative = |x: f64| {
                let (p, p_prev) = legendre_pair(n, x);
                (p, nf * (x * p - p_prev) / (x * x - 1.0))
            };
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = derivative(x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = derivative(x);
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect();
    Ok(QuadratureRule::from_symmetric(pairs))
}

/// `n`-point Gauss–Lobatto rule (endpoints included), exact for degree `2n - 3`.
pub fn gauss_lobatto(n: usize) -> Result<QuadratureRule> {
    if !(2..=MAX_RULE_POINTS).contains(&n) {
        return Err(Error::UnsupportedQuadrature(n));
    }
    // Newton iteration on (1 - x^2) P'_N with N = n - 1, Chebyshev–Lobatto start.
    let deg = n - 1;
    let degf = deg as f64;
    let pairs = (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * i as f64 / degf).cos();
            for _ in 0..100 {
                let (p, p_prev) = legendre_pair(deg, x);
                let dx = (x * p - p_prev) / (n as f64 * p);
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (p, _) = legendre_pair(deg, x);
            (x, 2.0 / (degf * n as f64 * p * p))
        })
        .collect();
    Ok(QuadratureRule::from_symmetric(pairs))
}
