//! Plain and importance-sampled estimators of terminal rare events.
//!
//! Events are deviations of `u^eps_T` from the skeleton's terminal state,
//! which is the zero-cost point of the rate function. The tilted estimator
//! samples from an even mixture of the two Girsanov shifts `+f` and `-f`,
//! where `f` is the optimal control reaching `(1 + margin) rho` along the
//! cheapest mode: both signs minimise the rate, so covering only one would
//! drop half of the probability. For a shift `f` with energy `E` and
//! log-density `lw = log dP/dQ_f`, the mirrored shift has
//! `log dQ_{-f}/dP = lw - E/eps`, so the mixture weight is
//! `2 / (e^{-lw} + e^{lw - E/eps})`.

use crate::basis::EigenBasis;
use crate::control::ControlPath;
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::ldp::rate::optimal_terminal_control;
use crate::noise::NoiseSpec;
use crate::rng::StreamKey;
use crate::sde::sample_terminal;
use crate::stats::MeanEstimate;
use crate::sweep::par_replicas;
use crate::trajectory::ModelParams;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TILT_MARGIN: f64 = 0.1;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959963984540054;
/// Stream mode reserved for the mixture component draw.
const MIXTURE_STREAM: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `||u_T - center|| > rho`.
    TerminalBall,
    /// `|u_T[mode] - center[mode]| > rho`.
    SingleModeExceed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareEventSpec {
    pub kind: EventKind,
    pub rho: f64,
    /// 1-based mode index (single-mode events only).
    pub mode: usize,
    /// Terminal state of the skeleton.
    pub center: SpectralField,
}

impl RareEventSpec {
    pub fn terminal_ball(rho: f64, center: SpectralField) -> Result<Self> {
        let s = Self {
            kind: EventKind::TerminalBall,
            rho,
            mode: 1,
            center,
        };
        s.validate(s.center.len())?;
        Ok(s)
    }

    pub fn single_mode(rho: f64, mode: usize, center: SpectralField) -> Result<Self> {
        let s = Self {
            kind: EventKind::SingleModeExceed,
            rho,
            mode,
            center,
        };
        s.validate(s.center.len())?;
        Ok(s)
    }

    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.mode == 0 || self.mode > n_modes {
            return Err(invalid(format!("mode {} outside 1..={n_modes}", self.mode)));
        }
        check_len("event center", n_modes, self.center.len())
    }

    pub fn contains(&self, terminal: &[f64]) -> bool {
        let c = self.center.coeffs();
        match self.kind {
            EventKind::TerminalBall => {
                let d2: f64 = terminal.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 > self.rho * self.rho
            }
            EventKind::SingleModeExceed => {
                let m = self.mode - 1;
                (terminal[m] - c[m]).abs() > self.rho
            }
        }
    }

    /// Mode along which the rate is cheapest (0-based).
    fn tilt_mode(&self, noise: &NoiseSpec) -> Result<usize> {
        match self.kind {
            EventKind::TerminalBall => noise
                .dominant_mode()
                .ok_or_else(|| invalid("all noise amplitudes vanish")),
            EventKind::SingleModeExceed => {
                let m = self.mode - 1;
                if noise.amplitudes()[m] == 0.0 {
                    Err(Error::OutsideRkhs { mode: self.mode })
                } else {
                    Ok(m)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Plain,
    Tilted { margin: f64 },
}

impl Method {
    pub fn tilted() -> Self {
        Method::Tilted {
            margin: DEFAULT_TILT_MARGIN,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Tilted { .. } => "tilted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Samples that landed in the event.
    pub hits: usize,
    pub epsilon: f64,
    pub neg_eps_log_p: f64,
    pub method: Method,
}

impl EstimatorResult {
    fn from_samples(values: &[f64], hits: usize, epsilon: f64, method: Method) -> Self {
        let n = values.len();
        let est = MeanEstimate::from_samples(values);
        let p_hat = est.mean.clamp(0.0, 1.0);
        let (ci_low, ci_high) = if hits == 0 {
            // One-sided 95% bound for a binomial with no successes.
            (0.0, 1.0 - 0.05f64.powf(1.0 / n as f64))
        } else {
            (
                (p_hat - Z95 * est.std_error).max(0.0),
                (p_hat + Z95 * est.std_error).min(1.0),
            )
        };
        Self {
            p_hat,
            ci_low,
            ci_high,
            std_error: est.std_error,
            n_samples: n,
            hits,
            epsilon,
            neg_eps_log_p: -epsilon * p_hat.ln(),
            method,
        }
    }

    /// Whether the two 95% intervals intersect.
    pub fn overlaps(&self, other: &EstimatorResult) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// `ln(e^a + e^b)` without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Minimum sample size accepted by the estimator.
pub const MIN_SAMPLES: usize = 1000;

/// Estimates `P(u^eps_T in event)` from `n` replicas.
#[allow(clippy::too_many_arguments)]
pub fn estimate_rare_event(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    spec: &RareEventSpec,
    n: usize,
    method: Method,
    seed: u64,
) -> Result<EstimatorResult> {
    spec.validate(basis.len())?;
    if n < MIN_SAMPLES {
        return Err(invalid(format!("n = {n} is below {MIN_SAMPLES}")));
    }
    let eps = params.epsilon;
    let samples: Vec<(f64, bool)> = match method {
        Method::Plain => par_replicas(n, |r| {
            let (x, _) = sample_terminal(
                basis,
                params,
                chi,
                noise,
                None,
                None,
                StreamKey::new(seed, r),
            )?;
            let hit = spec.contains(&x);
            Ok((if hit { 1.0 } else { 0.0 }, hit))
        })?,
        Method::Tilted { margin } => {
            if !(margin >= 0.0) {
                return Err(invalid(format!("tilt margin must be >= 0, got {margin}")));
            }
            let m = spec.tilt_mode(noise)?;
            let mut offset = vec![0.0; basis.len()];
            offset[m] = (1.0 + margin) * spec.rho;
            let (plus, _) = optimal_terminal_control(
                noise,
                &SpectralField::new(offset.clone())?,
                params.horizon,
                params.n_steps,
            )?;
            offset[m] = -offset[m];
            let (minus, _) = optimal_terminal_control(
                noise,
                &SpectralField::new(offset)?,
                params.horizon,
                params.n_steps,
            )?;
            let energy = plus.energy() / eps;
            par_replicas(n, |r| {
                let key = StreamKey::new(seed, r);
                let tilt: &ControlPath = if key.normal(MIXTURE_STREAM, 0, 0) >= 0.0 {
                    &plus
                } else {
                    &minus
                };
                let (x, lw) = sample_terminal(basis, params, chi, noise, None, Some(tilt), key)?;
                let hit = spec.contains(&x);
                let w = if hit {
                    (std::f64::consts::LN_2 - log_add_exp(-lw, lw - energy)).exp()
                } else {
                    0.0
                };
                Ok((w, hit))
            })?
        }
    };
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let hits = samples.iter().filter(|s| s.1).count();
    Ok(EstimatorResult::from_samples(&values, hits, eps, method))
}

/// Sample mean of the Girsanov density `e^{log_weight}` under the measure
/// tilted by `tilt`; equals 1 in expectation.
pub fn tilt_weight_mean(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    tilt: &ControlPath,
    n: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    let w = par_replicas(n, |r| {
        let (_, lw) = sample_terminal(
            basis,
            params,
            chi,
            noise,
            None,
            Some(tilt),
            StreamKey::new(seed, r),
        )?;
        Ok(lw.exp())
    })?;
    Ok(MeanEstimate::from_samples(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::gaussian::{exceed_probability, terminal_law};

    fn one_mode() -> (EigenBasis, NoiseSpec) {
        let b = EigenBasis::build(1, 64).unwrap();
        let n = NoiseSpec::custom(&b, vec![1.0], 2.0, 0.01).unwrap();
        (b, n)
    }

    #[test]
    fn spec_validation() {
        let c = SpectralField::zeros(2);
        assert!(RareEventSpec::single_mode(0.0, 1, c.clone()).is_err());
        assert!(RareEventSpec::single_mode(0.5, 3, c.clone()).is_err());
        assert!(RareEventSpec::terminal_ball(0.5, c).is_ok());
    }

    #[test]
    fn unreachable_event_has_zero_estimate() {
        let (b, _) = one_mode();
        let zero = NoiseSpec::zero(1);
        let chi = SpectralField::new(vec![1.0]).unwrap();
        let spec = RareEventSpec::single_mode(5.0, 1, chi.clone()).unwrap();
        let p = ModelParams::ns(0.2, 1.0, 1);
        let r = estimate_rare_event(&b, &p, &chi, &zero, &spec, 1000, Method::Plain, 1).unwrap();
        assert_eq!(r.p_hat, 0.0);
        assert_eq!(r.hits, 0);
        assert!(r.ci_high > 0.0 && r.ci_high < 0.01);
        assert!(r.neg_eps_log_p.is_infinite());
    }

    #[test]
    fn plain_matches_gaussian_oracle() {
        let (b, noise) = one_mode();
        let chi = SpectralField::new(vec![0.5]).unwrap();
        let p = ModelParams::ns(0.2, 1.0, 1);
        let spec = RareEventSpec::single_mode(0.3, 1, chi.clone()).unwrap();
        let r =
            estimate_rare_event(&b, &p, &chi, &noise, &spec, 100_000, Method::Plain, 11).unwrap();
        let (m, v) = terminal_law(&p.model().unwrap(), b.lambdas()[0], 1.0, 0.5, 1.0);
        let want = exceed_probability(m, v, 0.5, 0.3);
        assert!(
            (r.p_hat - want).abs() < 4.0 * r.std_error,
            "{} vs {want}",
            r.p_hat
        );
        assert!(r.ci_low <= r.p_hat && r.p_hat <= r.ci_high);
    }

    #[test]
    fn tilted_resolves_what_plain_cannot() {
        let (b, noise) = one_mode();
        let chi = SpectralField::zeros(1);
        let p = ModelParams::ns(0.01, 1.0, 1);
        let spec = RareEventSpec::single_mode(0.5, 1, chi.clone()).unwrap();
        let plain =
            estimate_rare_event(&b, &p, &chi, &noise, &spec, 10_000, Method::Plain, 5).unwrap();
        let tilted =
            estimate_rare_event(&b, &p, &chi, &noise, &spec, 10_000, Method::tilted(), 5).unwrap();
        assert_eq!(plain.hits, 0);
        let (m, v) = terminal_law(&p.model().unwrap(), b.lambdas()[0], 1.0, 0.0, 1.0);
        let want = exceed_probability(m, v, 0.0, 0.5);
        assert!(want < 1e-5);
        let half_width = 0.5 * (tilted.ci_high - tilted.ci_low);
        assert!(
            half_width <= 0.1 * tilted.p_hat,
            "{half_width} {}",
            tilted.p_hat
        );
        assert!((tilted.p_hat - want).abs() < 4.0 * tilted.std_error);
    }
}
