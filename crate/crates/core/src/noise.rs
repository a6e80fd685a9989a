//! Diagonal noise covariance in the eigenbasis and its reproducing-kernel
//! Hilbert space.

use crate::basis::EigenBasis;
use crate::error::{check_len, invalid, Result};
use serde::{Deserialize, Serialize};

const CAUCHY_TOLERANCE: f64 = 1e-6;

/// Per-mode noise amplitudes `q_k`: the driving process is
/// `W_t = sum_k q_k phi_k W^k_t` with independent scalar Brownian motions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    q: Vec<f64>,
    gamma: f64,
    delta_reg: f64,
    trace_q: f64,
}

impl NoiseSpec {
    /// `q_k = lambda_k^-(gamma + 1/2 + delta_reg)`, i.e. the cylindrical
    /// noise smoothed by a negative power of the Stokes operator.
    pub fn canonical(basis: &EigenBasis, gamma: f64, delta_reg: f64) -> Result<Self> {
        validate_exponents(gamma, delta_reg)?;
        let power = gamma + 0.5 + delta_reg;
        let q = basis.lambdas().iter().map(|l| l.powf(-power)).collect();
        Ok(Self::from_parts(q, gamma, delta_reg))
    }

    /// Arbitrary amplitudes. The weighted series `sum q_k^2 lambda_k^(2 gamma)`
    /// must have settled over the last quarter of the truncation.
    pub fn custom(basis: &EigenBasis, q: Vec<f64>, gamma: f64, delta_reg: f64) -> Result<Self> {
        validate_exponents(gamma, delta_reg)?;
        check_len("noise amplitudes", basis.len(), q.len())?;
        if let Some(k) = q.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!(
                "noise amplitude q_{} must be finite and nonnegative",
                k + 1
            )));
        }
        let weighted: Vec<f64> = q
            .iter()
            .zip(basis.lambdas())
            .map(|(q, l)| q * q * l.powf(2.0 * gamma))
            .collect();
        let total: f64 = weighted.iter().sum();
        let tail: f64 = weighted[q.len() - q.len() / 4..].iter().sum();
        if !total.is_finite() || tail > CAUCHY_TOLERANCE * total.max(1.0) {
            return Err(invalid(format!(
                "noise not summable in D((-A)^{gamma}): tail {tail:e} of total {total:e}"
            )));
        }
        Ok(Self::from_parts(q, gamma, delta_reg))
    }

    /// Zero noise on `len` modes.
    pub fn zero(len: usize) -> Self {
        Self::from_parts(vec![0.0; len], 2.0, 0.0)
    }

    fn from_parts(q: Vec<f64>, gamma: f64, delta_reg: f64) -> Self {
        let trace_q = q.iter().map(|v| v * v).sum();
        Self {
            q,
            gamma,
            delta_reg,
            trace_q,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta_reg(&self) -> f64 {
        self.delta_reg
    }

    /// `Tr Q = sum_k q_k^2`.
    pub fn trace_q(&self) -> f64 {
        self.trace_q
    }

    /// Same noise multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.q.iter().map(|q| q * factor).collect(),
            self.gamma,
            self.delta_reg,
        )
    }

    /// `||f||_{H0}^2 = sum f_k^2 / q_k^2`, or `+inf` when `f` charges a mode
    /// with zero amplitude.
    pub fn rkhs_norm_sq(&self, f: &[f64]) -> f64 {
        rkhs_norm_sq(self, f)
    }

    /// Index of the largest amplitude (first one on ties).
    pub fn dominant_mode(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, q) in self.q.iter().enumerate() {
            if *q > 0.0 && best.is_none_or(|b| *q > self.q[b]) {
                best = Some(k);
            }
        }
        best
    }
}

fn validate_exponents(gamma: f64, delta_reg: f64) -> Result<()> {
    if !(gamma >= 2.0) || !gamma.is_finite() {
        return Err(invalid(format!("gamma must be >= 2, got {gamma}")));
    }
    if !(delta_reg > 0.0) || !delta_reg.is_finite() {
        return Err(invalid(format!("delta_reg must be > 0, got {delta_reg}")));
    }
    Ok(())
}

pub fn rkhs_norm_sq(noise: &NoiseSpec, f: &[f64]) -> f64 {
    let mut total = 0.0;
    for (fk, qk) in f.iter().zip(noise.amplitudes()) {
        if *qk > 0.0 {
            total += (fk / qk) * (fk / qk);
        } else if *fk != 0.0 {
            return f64::INFINITY;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(k: usize) -> EigenBasis {
        EigenBasis::build(k, 64).unwrap()
    }

    #[test]
    fn rkhs_norm_examples() {
        let b1 = basis(1);
        let n = NoiseSpec::custom(&b1, vec![1.0], 2.0, 0.01).unwrap();
        assert_eq!(n.rkhs_norm_sq(&[2.0]), 4.0);

        let b2 = basis(2);
        let n = NoiseSpec::custom(&b2, vec![1.0, 0.0], 2.0, 0.01).unwrap();
        assert_eq!(n.rkhs_norm_sq(&[0.0, 1.0]), f64::INFINITY);
        assert_eq!(n.rkhs_norm_sq(&[3.0, 0.0]), 9.0);
    }

    #[test]
    fn canonical_first_mode_has_unit_rkhs_norm() {
        let b = basis(1);
        let n = NoiseSpec::canonical(&b, 2.0, 0.01).unwrap();
        let l1 = b.lambdas()[0];
        let f = l1.powf(-2.51);
        assert!((n.rkhs_norm_sq(&[f]) - 1.0).abs() < 1e-12);
        assert!((n.trace_q() - l1.powf(-5.02)).abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_parameters() {
        let b = basis(4);
        assert!(NoiseSpec::canonical(&b, 1.5, 0.01).is_err());
        assert!(NoiseSpec::canonical(&b, 2.0, 0.0).is_err());
        assert!(NoiseSpec::custom(&b, vec![1.0, -1.0, 0.0, 0.0], 2.0, 0.01).is_err());
        // Flat amplitudes are not summable against lambda^(2 gamma).
        assert!(NoiseSpec::custom(&b, vec![1.0; 4], 2.0, 0.01).is_err());
        assert!(NoiseSpec::custom(&b, vec![1.0, 0.5, 0.0, 0.0], 2.0, 0.01).is_ok());
    }

    #[test]
    fn dominant_mode_ignores_dead_modes() {
        let b = basis(3);
        let n = NoiseSpec::custom(&b, vec![0.5, 2.0, 0.0], 2.0, 0.01).unwrap();
        assert_eq!(n.dominant_mode(), Some(1));
        assert_eq!(NoiseSpec::zero(3).dominant_mode(), None);
    }
}
