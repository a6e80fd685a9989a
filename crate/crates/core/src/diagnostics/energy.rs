//! Discrete defects of the Itô energy identities.
//!
//! Every identity has the mode-wise form
//!
//! ```text
//! E(u_t) - E(u_0) + 2 int_0^t D(u_s) ds
//!     = eps t sum w_tr q_k^2 + 2 sqrt(eps) sum int w_m q_k u_k dW_k
//!       + 2 int sum w_f f_k u_k ds,
//! ```
//!
//! with `E(u) = sum w_e u_k^2`, `D(u) = sum w_d u_k^2`. Time integrals are
//! left-point sums, so the residual vanishes at `t = 0` by construction and
//! measures only discretisation error afterwards.

use crate::control::ControlPath;
use crate::error::{check_len, Error, Result};
use crate::io::CsvTable;
use crate::noise::NoiseSpec;
use crate::stats::rms;
use crate::trajectory::{ModelKind, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    NavierStokes,
    SecondGradeV,
    SecondGradeVorticity,
    Euler,
}

/// Which second-grade functional to balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgNorm {
    /// `||u||_V^2 = ||u||^2 + eps ||grad u||^2`.
    VNorm,
    /// `||curl(u - eps Delta u)||^2`.
    Vorticity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub identity: Identity,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Time step of the trajectory.
    pub step: f64,
}

impl ResidualSeries {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty series")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root mean square over the grid.
    pub fn rms(&self) -> f64 {
        rms(&self.values)
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["t", "residual"]);
        for (time, v) in self.times.iter().zip(&self.values) {
            t.push_numbers(&[*time, *v]);
        }
        t
    }
}

struct Weights {
    energy: Vec<f64>,
    dissipation: Vec<f64>,
    trace: Vec<f64>,
    martingale: Vec<f64>,
    forcing: Vec<f64>,
    /// Multiplies the trace and martingale terms (`eps`, or 0 for Euler).
    epsilon: f64,
}

impl Weights {
    fn new(identity: Identity, lambdas: &[f64], epsilon: f64, nu: f64) -> Self {
        let map = |f: &dyn Fn(f64) -> f64| lambdas.iter().map(|&l| f(l)).collect::<Vec<_>>();
        let e = epsilon;
        match identity {
            Identity::NavierStokes => Self {
                energy: map(&|_| 1.0),
                dissipation: map(&|l| e * l),
                trace: map(&|_| 1.0),
                martingale: map(&|_| 1.0),
                forcing: map(&|_| 1.0),
                epsilon,
            },
            Identity::SecondGradeV => Self {
                energy: map(&|l| 1.0 + e * l),
                dissipation: map(&|l| nu * l),
                trace: map(&|l| 1.0 / (1.0 + e * l)),
                martingale: map(&|_| 1.0),
                forcing: map(&|_| 1.0),
                epsilon,
            },
            Identity::SecondGradeVorticity => Self {
                energy: map(&|l| (1.0 + e * l).powi(2) * l),
                dissipation: map(&|l| nu * l * l * (1.0 + e * l)),
                trace: map(&|l| l),
                martingale: map(&|l| l * (1.0 + e * l)),
                forcing: map(&|l| l * (1.0 + e * l)),
                epsilon,
            },
            Identity::Euler => {
                let n = lambdas.len();
                Self {
                    energy: vec![1.0; n],
                    dissipation: vec![0.0; n],
                    trace: vec![0.0; n],
                    martingale: vec![0.0; n],
                    forcing: vec![1.0; n],
                    epsilon: 0.0,
                }
            }
        }
    }
}

/// Cumulative left-point sums, one entry per grid node.
struct Terms {
    energy: Vec<f64>,
    dissipation: Vec<f64>,
    trace: Vec<f64>,
    martingale: Vec<f64>,
    forcing: Vec<f64>,
}

fn quadratic(w: &[f64], u: &[f64]) -> f64 {
    w.iter().zip(u).map(|(w, u)| w * u * u).sum()
}

fn terms(
    traj: &Trajectory,
    noise: &NoiseSpec,
    control: Option<&ControlPath>,
    w: &Weights,
) -> Result<Terms> {
    let k = traj.n_modes();
    let n = traj.n_steps();
    check_len("noise", k, noise.len())?;
    let dw = traj.dw.as_ref().ok_or(Error::MissingIncrements)?;
    check_len("increments", n, dw.len())?;
    if let Some(c) = control {
        check_len("control steps", n, c.n_steps())?;
        check_len("control modes", k, c.n_modes())?;
    }
    let h = traj.step();
    let q = noise.amplitudes();
    let trace_rate = w.epsilon * quadratic(&w.trace, q);
    let sqrt_eps = w.epsilon.sqrt();

    let mut out = Terms {
        energy: Vec::with_capacity(n + 1),
        dissipation: Vec::with_capacity(n + 1),
        trace: Vec::with_capacity(n + 1),
        martingale: Vec::with_capacity(n + 1),
        forcing: Vec::with_capacity(n + 1),
    };
    let (mut diss, mut mart, mut force) = (0.0, 0.0, 0.0);
    for (i, time) in traj.times.iter().enumerate() {
        let u = traj.states[i].coeffs();
        out.energy.push(quadratic(&w.energy, u));
        out.dissipation.push(2.0 * diss);
        out.trace.push(time * trace_rate);
        out.martingale.push(2.0 * sqrt_eps * mart);
        out.forcing.push(2.0 * force);
        if i == n {
            break;
        }
        diss += h * quadratic(&w.dissipation, u);
        let mut m = 0.0;
        for kk in 0..k {
            m += w.martingale[kk] * q[kk] * u[kk] * dw[i][kk];
        }
        mart += m;
        if let Some(c) = control {
            let f = c.cell(i);
            let mut s = 0.0;
            for kk in 0..k {
                s += w.forcing[kk] * f[kk] * u[kk];
            }
            force += h * s;
        }
    }
    Ok(out)
}

fn residual_from(identity: Identity, traj: &Trajectory, t: &Terms) -> ResidualSeries {
    let e0 = t.energy[0];
    let values = (0..t.energy.len())
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            t.energy[i] + t.dissipation[i] - e0 - t.trace[i] - t.martingale[i] - t.forcing[i]
        })
        .collect();
    ResidualSeries {
        identity,
        times: traj.times.clone(),
        values,
        step: traj.step(),
    }
}

fn require_kind(traj: &Trajectory, kind: ModelKind) -> Result<()> {
    if traj.params.kind != kind {
        return Err(Error::WrongModel {
            expected: kind.name(),
            got: traj.params.kind.name(),
        });
    }
    Ok(())
}

/// Defect of `||u_t||^2 + 2 eps int ||grad u||^2 = ||u_0||^2 + t eps tr Q +
/// 2 sqrt(eps) int <u, dW> + 2 int <f, u>` along a Navier–Stokes path,
/// using the trajectory's own control.
pub fn energy_residual_ns(traj: &Trajectory, noise: &NoiseSpec) -> Result<ResidualSeries> {
    require_kind(traj, ModelKind::NavierStokes)?;
    let w = Weights::new(
        Identity::NavierStokes,
        &traj.lambdas,
        traj.params.epsilon,
        0.0,
    );
    let t = terms(traj, noise, traj.control.as_ref(), &w)?;
    Ok(residual_from(Identity::NavierStokes, traj, &t))
}

/// Second-grade energy (`VNorm`) or vorticity (`Vorticity`) defect.
pub fn energy_residual_sg(
    traj: &Trajectory,
    noise: &NoiseSpec,
    which: SgNorm,
) -> Result<ResidualSeries> {
    require_kind(traj, ModelKind::SecondGrade)?;
    let identity = match which {
        SgNorm::VNorm => Identity::SecondGradeV,
        SgNorm::Vorticity => Identity::SecondGradeVorticity,
    };
    let w = Weights::new(identity, &traj.lambdas, traj.params.epsilon, traj.params.nu);
    let t = terms(traj, noise, traj.control.as_ref(), &w)?;
    Ok(residual_from(identity, traj, &t))
}

/// Defect of `||u_t||^2 = ||u_0||^2 + 2 int <f, u>` along an Euler skeleton.
pub fn euler_energy_residual(traj: &Trajectory) -> Result<ResidualSeries> {
    require_kind(traj, ModelKind::Euler)?;
    let k = traj.n_modes();
    let w = Weights::new(Identity::Euler, &vec![0.0; k], 0.0, 0.0);
    let t = terms(traj, &NoiseSpec::zero(k), traj.control.as_ref(), &w)?;
    Ok(residual_from(Identity::Euler, traj, &t))
}

/// `2 eps int_0^T ||grad u||^2` as a left-point sum.
pub fn viscous_dissipation(traj: &Trajectory) -> Result<f64> {
    require_kind(traj, ModelKind::NavierStokes)?;
    let h = traj.step();
    let eps = traj.params.epsilon;
    let n = traj.n_steps();
    check_len("eigenvalues", traj.n_modes(), traj.lambdas.len())?;
    Ok(2.0
        * traj.states[..n]
            .iter()
            .map(|s| eps * h * quadratic(&traj.lambdas, s.coeffs()))
            .sum::<f64>())
}

/// Dissipated energy minus the energy budget,
/// `2 eps int ||grad u||^2 - [||u_0||^2 - ||u_T||^2 + T eps tr Q
/// + 2 sqrt(eps) int <u, dW> + 2 int <f, u>]`,
/// which coincides with the Navier–Stokes residual at `T`.
pub fn energy_balance_gap(
    traj: &Trajectory,
    noise: &NoiseSpec,
    control: &ControlPath,
) -> Result<f64> {
    require_kind(traj, ModelKind::NavierStokes)?;
    let w = Weights::new(
        Identity::NavierStokes,
        &traj.lambdas,
        traj.params.epsilon,
        0.0,
    );
    let t = terms(traj, noise, Some(control), &w)?;
    let n = traj.n_steps();
    let budget = t.energy[0] - t.energy[n] + t.trace[n] + t.martingale[n] + t.forcing[n];
    Ok(t.dissipation[n] - budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EigenBasis;
    use crate::field::SpectralField;
    use crate::rng::StreamKey;
    use crate::sde::{euler_skeleton, simulate};
    use crate::trajectory::ModelParams;

    fn basis() -> EigenBasis {
        EigenBasis::build(4, 64).unwrap()
    }

    fn chi() -> SpectralField {
        SpectralField::new(vec![1.0, -0.3, 0.2, 0.05]).unwrap()
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let b = basis();
        let noise = NoiseSpec::canonical(&b, 2.0, 0.01).unwrap();
        let p = ModelParams::ns(0.1, 1.0, 8);
        let zero = NoiseSpec::zero(4);
        let t = simulate(
            &b,
            &p,
            &SpectralField::zeros(4),
            &zero,
            &ControlPath::zero(4, 8, 1.0),
            0,
        )
        .unwrap();
        let r = energy_residual_ns(&t, &zero).unwrap();
        assert!(r.values.iter().all(|v| *v == 0.0));
        // The noise term only needs the stored increments.
        assert!(energy_residual_ns(&t, &noise).is_ok());
    }

    #[test]
    fn missing_increments_and_wrong_model() {
        let b = basis();
        let zero = NoiseSpec::zero(4);
        let p = ModelParams::ns(0.1, 1.0, 4);
        let mut t = simulate(&b, &p, &chi(), &zero, &ControlPath::zero(4, 4, 1.0), 0).unwrap();
        assert!(matches!(
            energy_residual_sg(&t, &zero, SgNorm::VNorm),
            Err(Error::WrongModel { .. })
        ));
        t.dw = None;
        assert!(matches!(
            energy_residual_ns(&t, &zero),
            Err(Error::MissingIncrements)
        ));
    }

    #[test]
    fn conserved_second_grade_quantities() {
        let b = basis();
        let zero = NoiseSpec::zero(4);
        let p = ModelParams::sg(0.1, 0.0, 1.0, 16);
        let t = simulate(&b, &p, &chi(), &zero, &ControlPath::zero(4, 16, 1.0), 0).unwrap();
        for which in [SgNorm::VNorm, SgNorm::Vorticity] {
            let r = energy_residual_sg(&t, &zero, which).unwrap();
            assert!(r.values.iter().all(|v| *v == 0.0), "{which:?}");
        }
    }

    #[test]
    fn deterministic_residual_is_first_order() {
        let b = basis();
        let zero = NoiseSpec::zero(4);
        let mut prev = None;
        for n in [32usize, 64, 128, 256] {
            let p = ModelParams::ns(0.1, 1.0, n);
            let t = simulate(&b, &p, &chi(), &zero, &ControlPath::zero(4, n, 1.0), 0).unwrap();
            let r = energy_residual_ns(&t, &zero).unwrap().max_abs();
            if let Some(pr) = prev {
                let ratio: f64 = pr / r;
                assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
            }
            prev = Some(r);
        }
    }

    #[test]
    fn gap_is_the_terminal_residual() {
        let b = basis();
        let noise = NoiseSpec::canonical(&b, 2.0, 0.01).unwrap();
        let f: Vec<f64> = noise.amplitudes().iter().map(|q| 0.5 * q).collect();
        let c = ControlPath::constant(&f, 32, 1.0, &noise).unwrap();
        let p = ModelParams::ns(0.1, 1.0, 32);
        let t = simulate(&b, &p, &chi(), &noise, &c, StreamKey::new(5, 2)).unwrap();
        let r = energy_residual_ns(&t, &noise).unwrap();
        let g = energy_balance_gap(&t, &noise, &c).unwrap();
        assert!((g - r.terminal()).abs() < 1e-12, "{g} {}", r.terminal());
    }

    #[test]
    fn appending_silent_modes_leaves_residual_unchanged() {
        let b = basis();
        let b6 = EigenBasis::build(6, 64).unwrap();
        let noise = NoiseSpec::canonical(&b, 2.0, 0.01).unwrap();
        let mut q6 = noise.amplitudes().to_vec();
        q6.extend([0.0, 0.0]);
        let noise6 = NoiseSpec::custom(&b6, q6, 2.0, 0.01).unwrap();
        let p = ModelParams::ns(0.1, 1.0, 16);
        let t4 = simulate(&b, &p, &chi(), &noise, &ControlPath::zero(4, 16, 1.0), 3).unwrap();
        let t6 = simulate(
            &b6,
            &p,
            &chi().padded(6),
            &noise6,
            &ControlPath::zero(6, 16, 1.0),
            3,
        )
        .unwrap();
        let r4 = energy_residual_ns(&t4, &noise).unwrap();
        let r6 = energy_residual_ns(&t6, &noise6).unwrap();
        assert_eq!(r4.values, r6.values);
    }

    #[test]
    fn euler_identity_up_to_left_point_error() {
        let b = basis();
        let noise = NoiseSpec::canonical(&b, 2.0, 0.01).unwrap();
        let f: Vec<f64> = noise.amplitudes().iter().map(|q| 2.0 * q).collect();
        let c = ControlPath::constant(&f, 4, 1.0, &noise).unwrap();
        let coarse = euler_energy_residual(&euler_skeleton(&chi(), &c, 64).unwrap()).unwrap();
        let fine = euler_energy_residual(&euler_skeleton(&chi(), &c, 128).unwrap()).unwrap();
        // ||F_T||^2 - 2 h sum <f, F_i> = h T ||f||^2 for a constant control.
        let f2: f64 = f.iter().map(|x| x * x).sum();
        assert!((coarse.terminal() - f2 / 64.0).abs() < 1e-13);
        assert!((fine.terminal() - f2 / 128.0).abs() < 1e-13);
    }
}
