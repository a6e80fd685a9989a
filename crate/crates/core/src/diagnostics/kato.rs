//! Viscous dissipation inside the boundary strip `{1 - c eps <= r <= 1}`.

use crate::basis::EigenBasis;
use crate::error::{check_len, invalid, Error, Result};
use crate::quadrature::{Quadrature, NODES_PER_PANEL};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_ANNULUS_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatoSpec {
    /// Strip constant.
    pub c: f64,
    pub epsilon: f64,
    pub annulus_panels: usize,
}

impl KatoSpec {
    pub fn new(c: f64, epsilon: f64) -> Self {
        Self {
            c,
            epsilon,
            annulus_panels: MIN_ANNULUS_PANELS,
        }
    }

    pub fn width(&self) -> f64 {
        self.c * self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.width();
        if !(self.c > 0.0 && self.epsilon > 0.0) || !(w > 0.0 && w <= 1.0) {
            return Err(invalid(format!(
                "strip width c*eps = {w} must lie in (0, 1]"
            )));
        }
        if self.annulus_panels < MIN_ANNULUS_PANELS {
            return Err(invalid(format!(
                "annulus_panels = {} is below {MIN_ANNULUS_PANELS}",
                self.annulus_panels
            )));
        }
        Ok(())
    }
}

/// The quadratic form `u -> 2 pi int_{1-c eps}^1 (u'^2 + u^2/r^2) r dr`
/// assembled once on the coefficient space.
#[derive(Debug, Clone)]
pub struct KatoOperator {
    spec: KatoSpec,
    matrix: Vec<Vec<f64>>,
}

impl KatoOperator {
    pub fn new(basis: &EigenBasis, spec: KatoSpec) -> Result<Self> {
        spec.validate()?;
        let quad = Quadrature::composite(
            1.0 - spec.width(),
            1.0,
            spec.annulus_panels,
            NODES_PER_PANEL,
        )?;
        let table = basis.mode_table(quad.nodes());
        let k = basis.len();
        let mut matrix = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let mut s = 0.0;
                for (i, (r, w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
                    s += w
                        * r
                        * (table.derivatives[a][i] * table.derivatives[b][i]
                            + table.over_r[a][i] * table.over_r[b][i]);
                }
                matrix[a][b] = 2.0 * PI * s;
                matrix[b][a] = matrix[a][b];
            }
        }
        Ok(Self { spec, matrix })
    }

    pub fn spec(&self) -> &KatoSpec {
        &self.spec
    }

    /// Strip Dirichlet energy of a single field.
    pub fn strip_energy(&self, coeffs: &[f64]) -> Result<f64> {
        check_len("field", self.matrix.len(), coeffs.len())?;
        let mut s = 0.0;
        for (row, ua) in self.matrix.iter().zip(coeffs) {
            let inner: f64 = row.iter().zip(coeffs).map(|(m, ub)| m * ub).sum();
            s += ua * inner;
        }
        Ok(s.max(0.0))
    }

    /// `eps sum_i h E_strip(u_{t_i})` over the left points of the grid.
    pub fn functional(&self, traj: &Trajectory) -> Result<f64> {
        let h = traj.step();
        let n = traj.n_steps();
        let mut total = 0.0;
        for s in &traj.states[..n] {
            total += h * self.strip_energy(s.coeffs())?;
        }
        Ok(self.spec.epsilon * total)
    }
}

/// `eps int_0^T ||grad u_s||^2_{L2(strip)} ds` with left-point time sums.
pub fn kato_functional(basis: &EigenBasis, traj: &Trajectory, spec: &KatoSpec) -> Result<f64> {
    if traj.n_modes() != basis.len() {
        return Err(Error::Dimension {
            what: "trajectory modes",
            expected: basis.len(),
            got: traj.n_modes(),
        });
    }
    KatoOperator::new(basis, *spec)?.functional(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlPath;
    use crate::field::SpectralField;
    use crate::noise::NoiseSpec;
    use crate::sde::simulate;
    use crate::stats::fit_slope;
    use crate::trajectory::ModelParams;

    fn static_traj(basis: &EigenBasis, field: &SpectralField, eps: f64) -> Trajectory {
        let k = basis.len();
        let p = ModelParams::sg(eps, 0.0, 1.0, 4);
        simulate(
            basis,
            &p,
            field,
            &NoiseSpec::zero(k),
            &ControlPath::zero(k, 4, 1.0),
            0,
        )
        .unwrap()
    }

    fn trapezoid_oracle(basis: &EigenBasis, coeffs: &[f64], a: f64) -> f64 {
        let n = 100_000;
        let h = (1.0 - a) / n as f64;
        let radii: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        let f = SpectralField::new(coeffs.to_vec()).unwrap();
        let vals = basis.eval_field(&f, &radii).unwrap();
        let g = |i: usize| {
            let r = radii[i];
            let (u, du) = vals[i];
            (du * du + u * u / (r * r)) * r
        };
        let mut s = 0.5 * (g(0) + g(n));
        for i in 1..n {
            s += g(i);
        }
        2.0 * PI * s * h
    }

    #[test]
    fn rejects_strips_outside_the_disk() {
        assert!(KatoSpec::new(20.0, 0.1).validate().is_err());
        assert!(KatoSpec::new(0.0, 0.1).validate().is_err());
        assert!(KatoSpec::new(10.0, 0.1).validate().is_ok());
        let mut s = KatoSpec::new(1.0, 0.1);
        s.annulus_panels = 8;
        assert!(s.validate().is_err());
    }

    #[test]
    fn zero_trajectory() {
        let b = EigenBasis::build(3, 64).unwrap();
        let t = static_traj(&b, &SpectralField::zeros(3), 0.1);
        assert_eq!(
            kato_functional(&b, &t, &KatoSpec::new(1.0, 0.1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn annulus_integral_matches_trapezoid() {
        let b = EigenBasis::build(6, 64).unwrap();
        let coeffs = [1.0, -0.4, 0.3, 0.2, -0.1, 0.05];
        let op = KatoOperator::new(&b, KatoSpec::new(1.0, 0.1)).unwrap();
        let got = op.strip_energy(&coeffs).unwrap();
        let want = trapezoid_oracle(&b, &coeffs, 0.9);
        assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn static_first_mode_scales_quadratically() {
        let b = EigenBasis::build(1, 64).unwrap();
        let phi = SpectralField::unit(1, 1).unwrap();
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let vals: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let t = static_traj(&b, &phi, e);
                let v = kato_functional(&b, &t, &KatoSpec::new(1.0, e)).unwrap();
                let want = e * trapezoid_oracle(&b, &[1.0], 1.0 - e);
                assert!((v - want).abs() <= 1e-8 * want);
                v
            })
            .collect();
        let fit = fit_slope(&eps, &vals).unwrap();
        assert!((fit.slope - 2.0).abs() <= 0.15, "slope {}", fit.slope);
    }

    #[test]
    fn monotone_and_bounded_by_full_dissipation() {
        let b = EigenBasis::build(5, 64).unwrap();
        let f = SpectralField::new(vec![1.0, 0.5, -0.5, 0.2, 0.1]).unwrap();
        let t = static_traj(&b, &f, 0.05);
        let full: f64 = 0.05
            * f.coeffs()
                .iter()
                .zip(b.lambdas())
                .map(|(u, l)| l * u * u)
                .sum::<f64>();
        let mut prev = 0.0;
        for c in [0.25, 1.0, 4.0, 20.0] {
            let v = kato_functional(&b, &t, &KatoSpec::new(c, 0.05)).unwrap();
            assert!(v >= prev);
            assert!(v <= full * (1.0 + 1e-8));
            prev = v;
        }
        assert!((prev - full).abs() <= 1e-8 * full);
    }
}
