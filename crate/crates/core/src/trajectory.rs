use crate::control::ControlPath;
use crate::error::{invalid, Result};
use crate::field::SpectralField;
use crate::io::CsvTable;
use crate::semigroup::Model;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NavierStokes,
    SecondGrade,
    /// Deterministic skeleton (forced Euler in the radial class).
    Euler,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::NavierStokes => "NS",
            ModelKind::SecondGrade => "SG",
            ModelKind::Euler => "Euler",
        }
    }
}

/// Model, parameters and the uniform time grid of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Noise intensity; also the viscosity for Navier–Stokes and the
    /// elastic parameter for second-grade fluids.
    pub epsilon: f64,
    /// Second-grade viscosity (unused otherwise).
    pub nu: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl ModelParams {
    pub fn ns(epsilon: f64, horizon: f64, n_steps: usize) -> Self {
        Self {
            kind: ModelKind::NavierStokes,
            epsilon,
            nu: 0.0,
            horizon,
            n_steps,
        }
    }

    pub fn sg(epsilon: f64, nu: f64, horizon: f64, n_steps: usize) -> Self {
        Self {
            kind: ModelKind::SecondGrade,
            epsilon,
            nu,
            horizon,
            n_steps,
        }
    }

    pub fn euler(horizon: f64, n_steps: usize) -> Self {
        Self {
            kind: ModelKind::Euler,
            epsilon: 0.0,
            nu: 0.0,
            horizon,
            n_steps,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    /// Same model at intensity `epsilon`, keeping `nu / epsilon` fixed.
    pub fn at_epsilon(self, epsilon: f64) -> Self {
        let nu = if self.epsilon > 0.0 {
            self.nu * epsilon / self.epsilon
        } else {
            self.nu
        };
        Self {
            epsilon,
            nu,
            ..self
        }
    }

    pub fn with_n_steps(self, n_steps: usize) -> Self {
        Self { n_steps, ..self }
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// `nu / epsilon`, the constant in `nu = O(epsilon)`.
    pub fn nu_ratio(&self) -> f64 {
        self.nu / self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(invalid(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps must be >= 1"));
        }
        if let Some(m) = self.model() {
            m.validate()?;
        }
        Ok(())
    }

    pub fn model(&self) -> Option<Model> {
        match self.kind {
            ModelKind::NavierStokes => Some(Model::NavierStokes {
                epsilon: self.epsilon,
            }),
            ModelKind::SecondGrade => Some(Model::SecondGrade {
                epsilon: self.epsilon,
                nu: self.nu,
            }),
            ModelKind::Euler => None,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..=self.n_steps).map(|i| i as f64 * h).collect()
    }
}

/// A simulated path on the uniform grid together with the Brownian
/// increments that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// `dw[i][k]`: increment of `W^k` over cell `i`.
    pub dw: Option<Vec<Vec<f64>>>,
    pub params: ModelParams,
    pub seed: u64,
    pub replica: u32,
    pub lambdas: Vec<f64>,
    pub control: Option<ControlPath>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    params: ModelParams,
    seed: u64,
    replica: u32,
    n_modes: usize,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn n_modes(&self) -> usize {
        self.states[0].len()
    }

    pub fn step(&self) -> f64 {
        self.params.step()
    }

    pub fn terminal(&self) -> &SpectralField {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// `sup_t ||u_t - other_t||^2` over the grid.
    pub fn sup_sq_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                a.coeffs()
                    .iter()
                    .zip(b.coeffs())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn states_table(&self) -> CsvTable {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|k| format!("mode_{k}")));
        let mut t = CsvTable::new(&header);
        for (time, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![*time];
            row.extend_from_slice(s.coeffs());
            t.push_numbers(&row);
        }
        t
    }

    /// Increment table; `t` is the left end of each cell.
    pub fn increments_table(&self) -> Option<CsvTable> {
        let dw = self.dw.as_ref()?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|k| format!("mode_{k}")));
        let mut t = CsvTable::new(&header);
        for (time, row) in self.times.iter().zip(dw) {
            let mut r = vec![*time];
            r.extend_from_slice(row);
            t.push_numbers(&r);
        }
        Some(t)
    }

    /// Writes `<stem>.csv`, `<stem>_dw.csv` (when increments are stored) and
    /// the `<stem>.json` sidecar into `dir`. Returns the written paths.
    pub fn export(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        let mut written = Vec::new();
        let states = dir.join(format!("{stem}.csv"));
        self.states_table().write(&states)?;
        written.push(states);
        if let Some(t) = self.increments_table() {
            let p = dir.join(format!("{stem}_dw.csv"));
            t.write(&p)?;
            written.push(p);
        }
        let sidecar = Sidecar {
            params: self.params,
            seed: self.seed,
            replica: self.replica,
            n_modes: self.n_modes(),
        };
        let p = dir.join(format!("{stem}.json"));
        std::fs::write(&p, serde_json::to_string_pretty(&sidecar)? + "\n")?;
        written.push(p);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ModelParams::ns(0.1, 1.0, 4).validate().is_ok());
        assert!(ModelParams::ns(0.0, 1.0, 4).validate().is_err());
        assert!(ModelParams::ns(0.1, 1.0, 0).validate().is_err());
        assert!(ModelParams::sg(0.1, -1.0, 1.0, 4).validate().is_err());
        assert!(ModelParams::euler(1.0, 3).validate().is_ok());
        assert_eq!(ModelParams::sg(0.1, 0.05, 1.0, 4).nu_ratio(), 0.5);
        let p = ModelParams::sg(0.1, 0.05, 1.0, 4).at_epsilon(0.025);
        assert!((p.nu - 0.0125).abs() < 1e-17);
        assert_eq!(
            ModelParams::ns(0.1, 1.0, 4).times(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }
}
