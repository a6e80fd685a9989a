//! Eigenbasis of the radial Stokes operator on the unit disk.
//!
//! A circularly symmetric field `u(r) x^perp/|x|` with no-slip trace solves
//! `-(u'' + u'/r - u/r^2) = lambda u`, `u(1) = 0`, whose solutions are
//! `phi_k(r) = c_k J1(j_k r)` with `j_k` the k-th positive zero of `J1` and
//! `lambda_k = j_k^2`. Normalization is taken against the disk measure
//! `2 pi r dr`, so coefficient vectors obey Parseval in `L2(B; R^2)`.

use crate::bessel::{self, find_bessel_zeros, Order};
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::quadrature::{Quadrature, NODES_PER_PANEL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const GRAM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    /// 1-based mode index.
    pub index: usize,
    pub zero: f64,
    pub eigenvalue: f64,
    pub norm_const: f64,
}

impl EigenMode {
    pub fn value(&self, r: f64) -> f64 {
        self.norm_const * bessel::bessel_j_unchecked(Order::One, self.zero * r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.norm_const * self.zero * bessel::j1_prime_unchecked(self.zero * r)
    }

    /// `phi_k(r) / r`, finite at the origin.
    pub fn value_over_r(&self, r: f64) -> f64 {
        self.norm_const * self.zero * bessel::j1_over_x_unchecked(self.zero * r)
    }
}

#[derive(Debug, Clone)]
pub struct EigenBasis {
    modes: Vec<EigenMode>,
    lambdas: Vec<f64>,
    panels: usize,
    quadrature: Quadrature,
    gram_tolerance: f64,
    gram_deviation: f64,
}

/// Minimum panel count for a basis of `k` modes.
pub fn min_panels(k: usize) -> usize {
    64.max(4 * k)
}

impl EigenBasis {
    /// Builds the first `k` modes and verifies orthonormality on a composite
    /// Gauss rule with `panels` panels of eight nodes.
    pub fn build(k: usize, panels: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("basis needs at least one mode"));
        }
        if panels < min_panels(k) {
            return Err(invalid(format!(
                "panels = {panels} is below max(64, 4K) = {}",
                min_panels(k)
            )));
        }
        let zeros = find_bessel_zeros(k)?;
        // int_0^1 J1(j r)^2 r dr = J0(j)^2 / 2 at a zero of J1.
        let norm_consts: Vec<f64> = zeros
            .iter()
            .map(|&j| 1.0 / (PI.sqrt() * bessel::bessel_j_unchecked(Order::Zero, j).abs()))
            .collect();
        Self::assemble(zeros, norm_consts, panels)
    }

    fn assemble(zeros: Vec<f64>, norm_consts: Vec<f64>, panels: usize) -> Result<Self> {
        let modes: Vec<EigenMode> = zeros
            .iter()
            .zip(&norm_consts)
            .enumerate()
            .map(|(i, (&zero, &norm_const))| EigenMode {
                index: i + 1,
                zero,
                eigenvalue: zero * zero,
                norm_const,
            })
            .collect();
        let lambdas = modes.iter().map(|m| m.eigenvalue).collect();
        let quadrature = Quadrature::composite(0.0, 1.0, panels, NODES_PER_PANEL)?;
        let mut basis = Self {
            modes,
            lambdas,
            panels,
            quadrature,
            gram_tolerance: GRAM_TOLERANCE,
            gram_deviation: f64::NAN,
        };
        let deviation = basis.measure_gram_deviation();
        if !(deviation <= basis.gram_tolerance) {
            return Err(Error::GramDeviation {
                deviation,
                tolerance: basis.gram_tolerance,
            });
        }
        basis.gram_deviation = deviation;
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.gram_tolerance
    }

    /// `max |G - I|` measured at construction.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// `G_km = 2 pi int_0^1 phi_k phi_m r dr` on the basis quadrature.
    pub fn gram_matrix(&self) -> Vec<Vec<f64>> {
        self.gram_matrix_with(&self.quadrature)
    }

    fn gram_matrix_with(&self, quad: &Quadrature) -> Vec<Vec<f64>> {
        let table = ModeTable::new(self, quad.nodes());
        let k = self.len();
        let mut g = vec![vec![0.0; k]; k];
        for (a, row) in g.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate().skip(a) {
                *entry = 2.0
                    * PI
                    * quad
                        .nodes()
                        .iter()
                        .zip(quad.weights())
                        .enumerate()
                        .map(|(i, (r, w))| w * r * table.values[a][i] * table.values[b][i])
                        .sum::<f64>();
            }
        }
        for a in 0..k {
            for b in 0..a {
                g[a][b] = g[b][a];
            }
        }
        g
    }

    fn measure_gram_deviation(&self) -> f64 {
        let g = self.gram_matrix();
        let mut worst = 0.0_f64;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Gram deviation measured with a rule of `panels` panels instead of the
    /// basis' own quadrature.
    pub fn gram_deviation_with_panels(&self, panels: usize) -> Result<f64> {
        let quad = Quadrature::composite(0.0, 1.0, panels, NODES_PER_PANEL)?;
        let g = self.gram_matrix_with(&quad);
        let mut worst = 0.0_f64;
        for (a, row) in g.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        Ok(worst)
    }

    /// Relative error of the quadrature value of
    /// `2 pi int [phi_k'^2 + phi_k^2 / r^2] r dr` against `lambda_k`.
    pub fn eigen_residuals(&self) -> Vec<f64> {
        let quad = &self.quadrature;
        self.modes
            .iter()
            .map(|m| {
                let energy = 2.0
                    * PI
                    * quad.integrate(|r| {
                        let d = m.derivative(r);
                        let v = m.value_over_r(r);
                        (d * d + v * v) * r
                    });
                (energy - m.eigenvalue).abs() / m.eigenvalue
            })
            .collect()
    }

    /// Profile value `u(r)` and radial derivative `u'(r)` at each radius.
    pub fn eval_field(&self, field: &SpectralField, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
        check_len("field", self.len(), field.len())?;
        if let Some(r) = radii.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(invalid(format!("radius {r} outside [0, 1]")));
        }
        Ok(radii
            .iter()
            .map(|&r| {
                self.modes
                    .iter()
                    .zip(field.coeffs())
                    .fold((0.0, 0.0), |(u, du), (m, c)| {
                        (u + c * m.value(r), du + c * m.derivative(r))
                    })
            })
            .collect())
    }

    /// `sqrt(sum lambda_k^(2s) v_k^2)`; `s = 0` is the L2 norm and `s = 1/2`
    /// the Dirichlet (gradient) norm.
    pub fn sobolev_norm(&self, field: &SpectralField, s: f64) -> Result<f64> {
        check_len("field", self.len(), field.len())?;
        Ok(sobolev_norm(&self.lambdas, field.coeffs(), s))
    }

    /// `||u||_V = sqrt(||u||^2 + eps ||grad u||^2)`.
    pub fn v_norm(&self, field: &SpectralField, epsilon: f64) -> Result<f64> {
        check_len("field", self.len(), field.len())?;
        Ok(field
            .coeffs()
            .iter()
            .zip(&self.lambdas)
            .map(|(v, l)| (1.0 + epsilon * l) * v * v)
            .sum::<f64>()
            .sqrt())
    }

    pub fn mode_table(&self, radii: &[f64]) -> ModeTable {
        ModeTable::new(self, radii)
    }

    pub fn to_document(&self) -> BasisDocument {
        BasisDocument {
            k: self.len(),
            zeros: self.modes.iter().map(|m| m.zero).collect(),
            lambdas: self.lambdas.clone(),
            norm_consts: self.modes.iter().map(|m| m.norm_const).collect(),
            panels: self.panels,
        }
    }

    pub fn from_document(doc: BasisDocument) -> Result<Self> {
        check_len("zeros", doc.k, doc.zeros.len())?;
        check_len("lambdas", doc.k, doc.lambdas.len())?;
        check_len("norm_consts", doc.k, doc.norm_consts.len())?;
        if doc.k == 0 {
            return Err(invalid("basis document has no modes"));
        }
        for (z, l) in doc.zeros.iter().zip(&doc.lambdas) {
            if z * z != *l {
                return Err(invalid(format!("lambda {l} is not the square of zero {z}")));
            }
        }
        if doc.zeros.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("zeros must be strictly increasing"));
        }
        Self::assemble(doc.zeros, doc.norm_consts, doc.panels)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn sobolev_norm(lambdas: &[f64], coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .zip(lambdas)
        .map(|(v, l)| l.powf(2.0 * s) * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Serialized form of an [`EigenBasis`]. Floats are written in shortest
/// round-trip decimal form, so import reproduces the basis bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDocument {
    #[serde(rename = "K")]
    pub k: usize,
    pub zeros: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub norm_consts: Vec<f64>,
    pub panels: usize,
}

/// Mode values, derivatives and `phi/r` tabulated at fixed radii.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub radii: Vec<f64>,
    /// `values[k][i] = phi_k(r_i)`.
    pub values: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub over_r: Vec<Vec<f64>>,
}

impl ModeTable {
    pub fn new(basis: &EigenBasis, radii: &[f64]) -> Self {
        let values = basis
            .modes
            .iter()
            .map(|m| radii.iter().map(|&r| m.value(r)).collect())
            .collect();
        let derivatives = basis
            .modes
            .iter()
            .map(|m| radii.iter().map(|&r| m.derivative(r)).collect())
            .collect();
        let over_r = basis
            .modes
            .iter()
            .map(|m| radii.iter().map(|&r| m.value_over_r(r)).collect())
            .collect();
        Self {
            radii: radii.to_vec(),
            values,
            derivatives,
            over_r,
        }
    }

    /// `(u(r_i), u'(r_i), u(r_i)/r_i)` for the coefficient vector `coeffs`.
    pub fn evaluate(&self, coeffs: &[f64], i: usize) -> (f64, f64, f64) {
        let mut u = 0.0;
        let mut du = 0.0;
        let mut ur = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            u += c * self.values[k][i];
            du += c * self.derivatives[k][i];
            ur += c * self.over_r[k][i];
        }
        (u, du, ur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integral_oracle_j1(x: f64) -> f64 {
        let nodes = 10_000;
        let h = PI / nodes as f64;
        let mut sum = 0.5 * (1.0 + (PI - x * PI.sin()).cos());
        for i in 1..nodes {
            let t = i as f64 * h;
            sum += (t - x * t.sin()).cos();
        }
        sum * h / PI
    }

    #[test]
    fn single_mode_basis() {
        let b = EigenBasis::build(1, 64).unwrap();
        assert!((b.lambdas()[0] - 14.6820).abs() < 1e-4);
        assert_eq!(b.lambdas()[0], b.modes()[0].zero * b.modes()[0].zero);
        assert!(b.modes()[0].value(1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_is_identity_and_agrees_with_doubled_rule() {
        let b = EigenBasis::build(8, 64).unwrap();
        assert!(b.gram_deviation() <= 1e-10);
        let coarse = b.gram_matrix();
        let fine = b.gram_matrix_with(&Quadrature::composite(0.0, 1.0, 128, 8).unwrap());
        for (rc, rf) in coarse.iter().zip(&fine) {
            for (c, f) in rc.iter().zip(rf) {
                assert!((c - f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_residuals_are_small() {
        let b = EigenBasis::build(32, 128).unwrap();
        for (k, r) in b.eigen_residuals().iter().enumerate() {
            assert!(*r < 1e-8, "mode {}: {r:e}", k + 1);
        }
        for m in b.modes() {
            assert!(m.value(1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn too_few_panels_is_rejected() {
        assert!(EigenBasis::build(32, 64).is_err());
        assert!(EigenBasis::build(0, 64).is_err());
    }

    #[test]
    fn eval_field_examples() {
        let b = EigenBasis::build(1, 64).unwrap();
        let one = SpectralField::new(vec![1.0]).unwrap();
        let zero = SpectralField::zeros(1);
        let at_rim = b.eval_field(&one, &[1.0]).unwrap();
        assert!(at_rim[0].0.abs() < 1e-10);
        for (u, du) in b.eval_field(&zero, &[0.0, 0.3, 1.0]).unwrap() {
            assert_eq!((u, du), (0.0, 0.0));
        }
        let m = b.modes()[0];
        let mid = b.eval_field(&one, &[0.5]).unwrap()[0].0;
        let oracle = m.norm_const * integral_oracle_j1(m.zero * 0.5);
        assert!((mid - oracle).abs() < 1e-12);
        let origin = b.eval_field(&one, &[0.0]).unwrap()[0];
        assert_eq!(origin.0, 0.0);
        assert!((origin.1 - m.norm_const * m.zero / 2.0).abs() < 1e-14);
        assert!(b.eval_field(&one, &[1.5]).is_err());
    }

    #[test]
    fn sobolev_and_v_norms() {
        let b = EigenBasis::build(2, 64).unwrap();
        let f = SpectralField::new(vec![3.0, 4.0]).unwrap();
        assert!((b.sobolev_norm(&f, 0.0).unwrap() - 5.0).abs() < 1e-15);
        let e1 = SpectralField::unit(2, 1).unwrap();
        assert_eq!(b.sobolev_norm(&e1, 0.0).unwrap(), 1.0);
        let s = b.sobolev_norm(&e1, 0.5).unwrap();
        assert!((s - b.modes()[0].zero).abs() < 1e-12);
        assert!((s - 3.83171).abs() < 1e-5);
        let v = b.v_norm(&e1, 0.1).unwrap();
        assert!((v * v - (1.0 + 0.1 * b.lambdas()[0])).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let b = EigenBasis::build(12, 64).unwrap();
        let text = b.to_json().unwrap();
        assert!(text.contains("\"K\": 12"));
        let back = EigenBasis::from_json(&text).unwrap();
        assert_eq!(back.to_document(), b.to_document());
        for (x, y) in back.modes().iter().zip(b.modes()) {
            assert_eq!(x.zero.to_bits(), y.zero.to_bits());
            assert_eq!(x.norm_const.to_bits(), y.norm_const.to_bits());
        }
    }

    #[test]
    fn corrupt_document_is_rejected() {
        let b = EigenBasis::build(3, 64).unwrap();
        let mut doc = b.to_document();
        doc.lambdas[1] += 1.0;
        assert!(EigenBasis::from_document(doc).is_err());
        let mut doc = b.to_document();
        doc.norm_consts[0] *= 1.01;
        assert!(matches!(
            EigenBasis::from_document(doc),
            Err(Error::GramDeviation { .. })
        ));
    }
}
