//! Closed-form laws of a single uncontrolled mode at the horizon. The radial
//! systems are Gaussian, so these give exact finite-`eps` reference values
//! for the estimators.

use crate::semigroup::Model;
use libm::erfc;
use std::f64::consts::SQRT_2;

/// Upper normal tail `P(Z > x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Mean and variance of mode `v(T)` started from `chi` without forcing.
pub fn terminal_law(model: &Model, lambda: f64, q: f64, chi: f64, horizon: f64) -> (f64, f64) {
    let a = model.decay_rate(lambda);
    let s = model.noise_gain(lambda, q);
    let mean = (-a * horizon).exp() * chi;
    let spread = if a * horizon > 1e-12 {
        -(-2.0 * a * horizon).exp_m1() / (2.0 * a)
    } else {
        horizon
    };
    (mean, s * s * spread)
}

/// `P(|X - center| > rho)` for `X ~ N(mean, var)`.
pub fn exceed_probability(mean: f64, var: f64, center: f64, rho: f64) -> f64 {
    let m = (mean - center).abs();
    let sd = var.sqrt();
    normal_tail((rho - m) / sd) + normal_tail((rho + m) / sd)
}

/// `-eps log E exp(-beta X^2 / eps)` for `X ~ N(mean, var)`.
pub fn laplace_value(beta: f64, mean: f64, var: f64, epsilon: f64) -> f64 {
    let r = 2.0 * beta * var / epsilon;
    0.5 * epsilon * r.ln_1p() + beta * mean * mean / (1.0 + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails() {
        assert!((normal_tail(0.0) - 0.5).abs() < 1e-16);
        let p = normal_tail(1.959963984540054);
        assert!((p - 0.025).abs() < 1e-12, "{p}");
        // Far tail, against the asymptotic series phi(x)/x (1 - 1/x^2 + 3/x^4).
        let x: f64 = 8.0;
        let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let asym = phi / x * (1.0 - 1.0 / (x * x) + 3.0 / x.powi(4) - 15.0 / x.powi(6));
        assert!(
            (normal_tail(x) / asym - 1.0).abs() < 1e-4,
            "{} {asym}",
            normal_tail(x)
        );
    }

    #[test]
    fn laplace_of_point_mass() {
        assert!((laplace_value(1.0, 1.0, 0.0, 0.1) - 1.0).abs() < 1e-15);
        assert_eq!(laplace_value(0.0, 1.0, 0.3, 0.1), 0.0);
    }

    #[test]
    fn ns_law_small_rate_limit() {
        let m = Model::NavierStokes { epsilon: 1e-20 };
        let (mean, var) = terminal_law(&m, 10.0, 2.0, 1.0, 0.5);
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((var - 1e-20 * 4.0 * 0.5).abs() < 1e-30);
    }
}
