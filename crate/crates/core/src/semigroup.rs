//! Mode-wise linear dynamics of the radial Navier–Stokes and second-grade
//! systems.
//!
//! In the eigenbasis both systems decouple into scalar Ornstein–Uhlenbeck
//! equations `dv_k = (-a_k v_k + g_k f_k) dt + s_k dW^k` with
//!
//! | model | decay `a_k`                 | forcing gain `g_k`   | noise gain `s_k`              |
//! |-------|-----------------------------|----------------------|-------------------------------|
//! | NS    | `eps lambda_k`              | `1`                  | `sqrt(eps) q_k`               |
//! | SG    | `nu lambda_k / (1+eps lambda_k)` | `1/(1+eps lambda_k)` | `sqrt(eps) q_k/(1+eps lambda_k)` |

use crate::basis::EigenBasis;
use crate::error::{check_len, invalid, Result};
use crate::field::SpectralField;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    NavierStokes { epsilon: f64 },
    SecondGrade { epsilon: f64, nu: f64 },
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Model::NavierStokes { epsilon } => positive("epsilon", epsilon),
            Model::SecondGrade { epsilon, nu } => {
                positive("epsilon", epsilon)?;
                if !(nu >= 0.0) || !nu.is_finite() {
                    return Err(invalid(format!("nu must be >= 0, got {nu}")));
                }
                Ok(())
            }
        }
    }

    pub fn epsilon(&self) -> f64 {
        match *self {
            Model::NavierStokes { epsilon } | Model::SecondGrade { epsilon, .. } => epsilon,
        }
    }

    pub fn decay_rate(&self, lambda: f64) -> f64 {
        match *self {
            Model::NavierStokes { epsilon } => epsilon * lambda,
            Model::SecondGrade { epsilon, nu } => nu * lambda / (1.0 + epsilon * lambda),
        }
    }

    pub fn forcing_gain(&self, lambda: f64) -> f64 {
        match *self {
            Model::NavierStokes { .. } => 1.0,
            Model::SecondGrade { epsilon, .. } => 1.0 / (1.0 + epsilon * lambda),
        }
    }

    pub fn noise_gain(&self, lambda: f64, q: f64) -> f64 {
        self.epsilon().sqrt() * q * self.forcing_gain(lambda)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be > 0, got {v}")))
    }
}

/// `(1 - e^{-a h}) / a`, equal to `h` at `a = 0`.
pub(crate) fn phi1(a: f64, h: f64) -> f64 {
    if a == 0.0 {
        h
    } else {
        -(-a * h).exp_m1() / a
    }
}

/// `sqrt((1 - e^{-2 a h}) / (2 a h))`: rescales a variance-`h` Gaussian to
/// the exact one-step variance of the OU convolution.
pub(crate) fn variance_ratio(a: f64, h: f64) -> f64 {
    let x = 2.0 * a * h;
    if x == 0.0 {
        1.0
    } else {
        (-(-x).exp_m1() / x).sqrt()
    }
}

/// Multiplier of mode `k` in `e^{t L}` for the model generator `L`.
pub fn multipliers(lambdas: &[f64], model: &Model, t: f64) -> Vec<f64> {
    lambdas
        .iter()
        .map(|&l| (-model.decay_rate(l) * t).exp())
        .collect()
}

/// Applies the model semigroup for time `t`.
pub fn semigroup_apply(
    basis: &EigenBasis,
    field: &SpectralField,
    model: &Model,
    t: f64,
) -> Result<SpectralField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("semigroup time must be >= 0, got {t}")));
    }
    model.validate()?;
    check_len("field", basis.len(), field.len())?;
    let m = multipliers(basis.lambdas(), model, t);
    Ok(SpectralField::from_vec_unchecked(
        field.coeffs().iter().zip(&m).map(|(v, m)| v * m).collect(),
    ))
}
