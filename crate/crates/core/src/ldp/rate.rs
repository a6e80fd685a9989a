use crate::control::ControlPath;
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::noise::NoiseSpec;
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

/// Relative tolerance for movement of a mode the noise cannot reach.
const DEAD_MODE_TOLERANCE: f64 = 1e-12;

/// `1/2 int_0^T ||d/dt v||_{H0}^2 dt`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateValue {
    pub value: f64,
}

impl RateValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Rate of a state grid with uniform spacing `h`.
///
/// The time derivative is the forward difference on each cell, which is the
/// exact derivative of the piecewise-linear interpolant; on skeleton paths
/// driven by piecewise-constant controls the result is exact.
pub fn rate_of_states(noise: &NoiseSpec, states: &[Vec<f64>], h: f64) -> Result<RateValue> {
    if states.len() < 2 {
        return Err(invalid(format!(
            "rate functional needs at least 2 grid nodes, got {}",
            states.len()
        )));
    }
    if !(h > 0.0) {
        return Err(invalid(format!("grid spacing must be > 0, got {h}")));
    }
    let k = noise.len();
    for s in states {
        check_len("path state", k, s.len())?;
    }
    let q = noise.amplitudes();
    let scale = states
        .iter()
        .map(|s| s.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let tol = DEAD_MODE_TOLERANCE * (1.0 + scale);
    for (m, qm) in q.iter().enumerate() {
        if *qm == 0.0 && states.iter().any(|s| (s[m] - states[0][m]).abs() > tol) {
            return Ok(RateValue {
                value: f64::INFINITY,
            });
        }
    }
    let mut total = 0.0;
    for pair in states.windows(2) {
        let mut cell = 0.0;
        for m in 0..k {
            if q[m] > 0.0 {
                let d = (pair[1][m] - pair[0][m]) / h;
                cell += d * d / (q[m] * q[m]);
            }
        }
        total += cell;
    }
    Ok(RateValue {
        value: 0.5 * h * total,
    })
}

pub fn rate_functional(noise: &NoiseSpec, path: &Trajectory) -> Result<RateValue> {
    let states: Vec<Vec<f64>> = path.states.iter().map(|s| s.coeffs().to_vec()).collect();
    rate_of_states(noise, &states, path.step())
}

/// Cheapest control moving the skeleton's terminal state by `offset` in
/// time `horizon`: the constant `offset / horizon`, with cost
/// `sum offset_k^2 / (2 T q_k^2)`.
pub fn optimal_terminal_control(
    noise: &NoiseSpec,
    offset: &SpectralField,
    horizon: f64,
    n_steps: usize,
) -> Result<(ControlPath, f64)> {
    check_len("offset", noise.len(), offset.len())?;
    if !(horizon > 0.0) || n_steps == 0 {
        return Err(invalid("horizon and n_steps must be positive"));
    }
    for (m, (d, q)) in offset.coeffs().iter().zip(noise.amplitudes()).enumerate() {
        if *q == 0.0 && *d != 0.0 {
            return Err(Error::OutsideRkhs { mode: m + 1 });
        }
    }
    let f: Vec<f64> = offset.coeffs().iter().map(|d| d / horizon).collect();
    let cost = 0.5 * horizon * noise.rkhs_norm_sq(&f);
    let control = ControlPath::new(vec![f; n_steps], horizon, noise, 2.0 * cost)?;
    Ok((control, cost))
}

/// `rho^2 / (2 T max_k q_k^2)`: leaving the ball of radius `rho` around the
/// skeleton's terminal state costs least along the noisiest mode.
pub fn terminal_ball_rate(noise: &NoiseSpec, rho: f64, horizon: f64) -> Result<f64> {
    let k = noise
        .dominant_mode()
        .ok_or_else(|| invalid("all noise amplitudes vanish"))?;
    if !(rho > 0.0 && horizon > 0.0) {
        return Err(invalid("rho and horizon must be positive"));
    }
    let q = noise.amplitudes()[k];
    Ok(rho * rho / (2.0 * horizon * q * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EigenBasis;
    use crate::sde::euler_skeleton;

    fn noise(q: Vec<f64>) -> NoiseSpec {
        let b = EigenBasis::build(q.len(), 64).unwrap();
        NoiseSpec::custom(&b, q, 2.0, 0.01).unwrap()
    }

    #[test]
    fn constant_and_linear_paths() {
        let n = noise(vec![1.0]);
        let flat = vec![vec![0.7]; 11];
        assert_eq!(rate_of_states(&n, &flat, 0.1).unwrap().value, 0.0);
        let a = 3.0;
        let line: Vec<Vec<f64>> = (0..=10).map(|i| vec![a * i as f64 / 10.0]).collect();
        let r = rate_of_states(&n, &line, 0.1).unwrap().value;
        assert!((r - a * a / 2.0).abs() < 1e-12);
        assert!(rate_of_states(&n, &flat[..1], 0.1).is_err());
    }

    #[test]
    fn dead_mode_motion_is_infinite() {
        let n = noise(vec![1.0, 0.0]);
        let p = vec![vec![0.0, 0.0], vec![0.1, 1e-6]];
        assert!(!rate_of_states(&n, &p, 1.0).unwrap().is_finite());
        let still = vec![vec![0.0, 0.5], vec![0.1, 0.5]];
        assert!(rate_of_states(&n, &still, 1.0).unwrap().is_finite());
    }

    #[test]
    fn skeleton_round_trip() {
        let n = noise(vec![1.0, 0.5]);
        let c = ControlPath::new(
            vec![vec![1.0, -0.2], vec![-3.0, 0.4], vec![0.5, 0.0]],
            1.5,
            &n,
            100.0,
        )
        .unwrap();
        let chi = SpectralField::new(vec![0.3, -0.1]).unwrap();
        let sk = euler_skeleton(&chi, &c, 12).unwrap();
        let r = rate_functional(&n, &sk).unwrap().value;
        assert!((r - 0.5 * c.energy()).abs() <= 1e-12 * r);
    }

    #[test]
    fn optimal_control_examples() {
        let n = noise(vec![1.0]);
        let (c, cost) = optimal_terminal_control(&n, &SpectralField::zeros(1), 1.0, 4).unwrap();
        assert!(c.is_zero());
        assert_eq!(cost, 0.0);
        let (c, cost) =
            optimal_terminal_control(&n, &SpectralField::new(vec![1.0]).unwrap(), 1.0, 4).unwrap();
        assert_eq!(c.cell(0), &[1.0]);
        assert!((cost - 0.5).abs() < 1e-15);
        let (_, cost) =
            optimal_terminal_control(&n, &SpectralField::new(vec![2.0]).unwrap(), 4.0, 8).unwrap();
        assert!((cost - 0.5).abs() < 1e-15);
        let dead = noise(vec![1.0, 0.0]);
        assert!(matches!(
            optimal_terminal_control(&dead, &SpectralField::new(vec![0.0, 1.0]).unwrap(), 1.0, 2),
            Err(Error::OutsideRkhs { mode: 2 })
        ));
    }

    #[test]
    fn ball_rate_examples() {
        assert_eq!(
            terminal_ball_rate(&noise(vec![1.0]), 1.0, 1.0).unwrap(),
            0.5
        );
        assert_eq!(
            terminal_ball_rate(&noise(vec![2.0, 1.0]), 2.0, 1.0).unwrap(),
            0.5
        );
        let base = terminal_ball_rate(&noise(vec![2.0, 1.0]), 0.3, 2.0).unwrap();
        let doubled = terminal_ball_rate(&noise(vec![2.0, 1.0]), 0.6, 2.0).unwrap();
        assert!((doubled - 4.0 * base).abs() < 1e-15);
        assert!(terminal_ball_rate(&noise(vec![0.0]), 1.0, 1.0).is_err());
    }
}
