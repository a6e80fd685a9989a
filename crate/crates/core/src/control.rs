use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSpec;
use serde::{Deserialize, Serialize};

/// Relative slack when comparing the control energy with its bound.
const ENERGY_SLACK: f64 = 1e-12;

/// Piecewise-constant deterministic control on a uniform grid, validated to
/// lie in `S^N = { f : int_0^T ||f_s||_{H0}^2 ds <= N }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    /// `values[i][k]`: forcing of mode `k` on cell `i`.
    values: Vec<Vec<f64>>,
    horizon: f64,
    energy_bound: f64,
    energy: f64,
}

impl ControlPath {
    pub fn new(
        values: Vec<Vec<f64>>,
        horizon: f64,
        noise: &NoiseSpec,
        energy_bound: f64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("control needs at least one cell"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be > 0, got {horizon}")));
        }
        let k = noise.len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension {
                    what: "control cell",
                    expected: k,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("control cell {i} is not finite")));
            }
            for (m, (f, q)) in row.iter().zip(noise.amplitudes()).enumerate() {
                if *q == 0.0 && *f != 0.0 {
                    return Err(Error::OutsideRkhs { mode: m + 1 });
                }
            }
        }
        let h = horizon / values.len() as f64;
        let energy = values.iter().map(|row| h * noise.rkhs_norm_sq(row)).sum();
        if energy > energy_bound * (1.0 + ENERGY_SLACK) {
            return Err(Error::EnergyBound {
                energy,
                bound: energy_bound,
            });
        }
        Ok(Self {
            values,
            horizon,
            energy_bound,
            energy,
        })
    }

    /// Same forcing on every cell, with the bound set to its own energy.
    pub fn constant(f: &[f64], n_steps: usize, horizon: f64, noise: &NoiseSpec) -> Result<Self> {
        let h = horizon / n_steps.max(1) as f64;
        let bound = n_steps as f64 * h * noise.rkhs_norm_sq(f);
        Self::new(vec![f.to_vec(); n_steps], horizon, noise, bound)
    }

    pub fn zero(n_modes: usize, n_steps: usize, horizon: f64) -> Self {
        Self {
            values: vec![vec![0.0; n_modes]; n_steps.max(1)],
            horizon,
            energy_bound: 0.0,
            energy: 0.0,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    pub fn n_modes(&self) -> usize {
        self.values[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn energy_bound(&self) -> f64 {
        self.energy_bound
    }

    /// `sum_cells h ||f_i||_{H0}^2`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|v| *v == 0.0)
    }

    /// The same function of time on a grid `factor` times finer.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let values = self
            .values
            .iter()
            .flat_map(|row| std::iter::repeat_n(row.clone(), factor))
            .collect();
        Self { values, ..*self }
    }

    /// Time integral `F_t = int_0^t f_s ds` at every grid node.
    pub fn integral(&self) -> Vec<Vec<f64>> {
        let h = self.step();
        let mut acc = vec![0.0; self.n_modes()];
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        out.push(acc.clone());
        for row in &self.values {
            for (a, f) in acc.iter_mut().zip(row) {
                *a += h * f;
            }
            out.push(acc.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EigenBasis;

    fn noise() -> NoiseSpec {
        let b = EigenBasis::build(2, 64).unwrap();
        NoiseSpec::custom(&b, vec![1.0, 0.0], 2.0, 0.01).unwrap()
    }

    #[test]
    fn energy_bound_is_enforced() {
        let n = noise();
        let ok = ControlPath::new(vec![vec![1.0, 0.0]; 4], 1.0, &n, 1.0).unwrap();
        assert!((ok.energy() - 1.0).abs() < 1e-15);
        assert!(matches!(
            ControlPath::new(vec![vec![2.0, 0.0]; 4], 1.0, &n, 1.0),
            Err(Error::EnergyBound { .. })
        ));
    }

    #[test]
    fn dead_modes_must_stay_unforced() {
        let n = noise();
        assert!(matches!(
            ControlPath::new(vec![vec![0.0, 1.0]; 2], 1.0, &n, 10.0),
            Err(Error::OutsideRkhs { mode: 2 })
        ));
    }

    #[test]
    fn refinement_preserves_energy_and_integral() {
        let n = noise();
        let c = ControlPath::new(vec![vec![1.0, 0.0], vec![-2.0, 0.0]], 1.0, &n, 10.0).unwrap();
        let r = c.refined(4);
        assert_eq!(r.n_steps(), 8);
        assert!((r.energy() - c.energy()).abs() < 1e-14);
        let a = c.integral();
        let b = r.integral();
        assert!((a[2][0] - b[8][0]).abs() < 1e-15);
        assert!((a[1][0] - b[4][0]).abs() < 1e-15);
    }
}
