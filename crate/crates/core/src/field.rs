use crate::error::{check_len, invalid, Result};
use serde::{Deserialize, Serialize};

/// Coefficients of a circularly symmetric velocity field in the orthonormal
/// eigenbasis. The represented field is `u(r) x^perp / |x|` with
/// `u(r) = sum_k v_k phi_k(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coefficient {} is not finite", k + 1)));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![0.0; len],
        }
    }

    /// Unit vector along the 1-based mode `k`.
    pub fn unit(len: usize, k: usize) -> Result<Self> {
        if k == 0 || k > len {
            return Err(invalid(format!("mode {k} outside 1..={len}")));
        }
        let mut coeffs = vec![0.0; len];
        coeffs[k - 1] = 1.0;
        Ok(Self { coeffs })
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// L2 norm of the represented vector field (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len("field", self.len(), other.len())?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Extends the field with zero coefficients up to `len` modes.
    pub fn padded(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len.max(self.len()), 0.0);
        Self { coeffs }
    }
}

impl From<SpectralField> for Vec<f64> {
    fn from(f: SpectralField) -> Self {
        f.coeffs
    }
}

impl std::ops::Index<usize> for SpectralField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coeffs[i]
    }
}
