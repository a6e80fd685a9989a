use crate::basis::EigenBasis;
use crate::error::{invalid, Result};
use crate::field::SpectralField;
use crate::io::{fmt_f64, CsvTable};
use crate::ldp::estimate::{
    estimate_rare_event, EstimatorResult, EventKind, Method, RareEventSpec,
};
use crate::ldp::rate::terminal_ball_rate;
use crate::noise::NoiseSpec;
use crate::trajectory::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub estimate: EstimatorResult,
    pub rate_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpStudy {
    pub rows: Vec<StudyRow>,
    pub rate_prediction: f64,
    /// Richardson extrapolation of `-eps log p` from the two smallest `eps`.
    pub extrapolated: f64,
    pub seed: u64,
}

impl LdpStudy {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "epsilon",
            "p_hat",
            "ci_low",
            "ci_high",
            "neg_eps_log_p",
            "rate_prediction",
            "method",
            "n",
            "seed",
        ]);
        for r in &self.rows {
            let e = &r.estimate;
            t.push_raw(vec![
                fmt_f64(e.epsilon),
                fmt_f64(e.p_hat),
                fmt_f64(e.ci_low),
                fmt_f64(e.ci_high),
                fmt_f64(e.neg_eps_log_p),
                fmt_f64(r.rate_prediction),
                e.method.name().to_string(),
                e.n_samples.to_string(),
                self.seed.to_string(),
            ]);
        }
        t
    }
}

/// First-order Richardson extrapolation to `eps = 0` from values at
/// `eps_coarse > eps_fine`, assuming `V(eps) = V(0) + c eps`.
pub fn richardson(eps_coarse: f64, v_coarse: f64, eps_fine: f64, v_fine: f64) -> f64 {
    let r = eps_coarse / eps_fine;
    (r * v_fine - v_coarse) / (r - 1.0)
}

/// Rate of the event predicted by the large-deviation principle.
pub fn event_rate(noise: &NoiseSpec, spec: &RareEventSpec, horizon: f64) -> Result<f64> {
    match spec.kind {
        EventKind::TerminalBall => terminal_ball_rate(noise, spec.rho, horizon),
        EventKind::SingleModeExceed => {
            let q = noise.amplitudes()[spec.mode - 1];
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(spec.rho * spec.rho / (2.0 * horizon * q * q))
        }
    }
}

/// `-eps log p_eps` over a dyadic sweep of `eps`, compared with the rate.
#[allow(clippy::too_many_arguments)]
pub fn ldp_convergence_study(
    basis: &EigenBasis,
    base: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    spec: &RareEventSpec,
    epsilons: &[f64],
    n: usize,
    method: Method,
    seed: u64,
) -> Result<LdpStudy> {
    if epsilons.len() < 4 {
        return Err(invalid("an LDP study needs at least 4 intensities"));
    }
    for w in epsilons.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "intensities must halve at each step: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    spec.validate(basis.len())?;
    let rate_prediction = event_rate(noise, spec, base.horizon)?;
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let estimate = estimate_rare_event(
                basis,
                &base.at_epsilon(eps),
                chi,
                noise,
                spec,
                n,
                method,
                seed,
            )?;
            Ok(StudyRow {
                estimate,
                rate_prediction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a = &rows[rows.len() - 2].estimate;
    let b = &rows[rows.len() - 1].estimate;
    Ok(LdpStudy {
        extrapolated: richardson(a.epsilon, a.neg_eps_log_p, b.epsilon, b.neg_eps_log_p),
        rows,
        rate_prediction,
        seed,
    })
}
