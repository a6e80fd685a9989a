//! Composite Gauss–Legendre quadrature on an interval.

use crate::error::{invalid, Result};
use std::f64::consts::PI;

/// Nodes per panel used throughout the crate.
pub const NODES_PER_PANEL: usize = 8;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Node/weight table for a composite rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    /// `panels` equal sub-intervals of `[a, b]`, each with `order` Gauss points.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(invalid("quadrature needs at least one panel and one node"));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("bad quadrature interval [{a}, {b}]")));
        }
        let (xs, ws) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let left = a + p as f64 * width;
            let mid = left + 0.5 * width;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_point_rule_is_exact_to_degree_fifteen() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        for deg in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let want = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            assert!((got - want).abs() < 1e-14, "degree {deg}");
        }
        assert!(x.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn composite_rule_integrates_smooth_functions() {
        let q = Quadrature::composite(0.0, 1.0, 16, NODES_PER_PANEL).unwrap();
        let got = q.integrate(|r| (3.0 * r).sin() * r);
        let want = ((3.0f64).sin() - 3.0 * (3.0f64).cos()) / 9.0;
        assert!((got - want).abs() < 1e-15);
        assert!(q.nodes().iter().all(|&r| r > 0.0 && r < 1.0));
    }

    #[test]
    fn rejects_empty_rules() {
        assert!(Quadrature::composite(0.0, 1.0, 0, 8).is_err());
        assert!(Quadrature::composite(1.0, 1.0, 4, 8).is_err());
    }
}
