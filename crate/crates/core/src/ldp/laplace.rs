use crate::basis::EigenBasis;
use crate::error::{invalid, Error, Result};
use crate::field::SpectralField;
use crate::noise::NoiseSpec;
use crate::rng::StreamKey;
use crate::sde::sample_terminal;
use crate::sweep::par_replicas;
use crate::trajectory::ModelParams;
use serde::{Deserialize, Serialize};

/// Terminal functional `h(v) = beta * v_T[mode]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceSpec {
    pub beta: f64,
    /// 1-based mode index.
    pub mode: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    /// `-eps log (1/n) sum exp(-h(X_i)/eps)`.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    pub n_samples: usize,
    pub epsilon: f64,
}

/// `inf_f { h(skeleton_T) + I(f) } = beta m0^2 / (1 + 2 beta T q^2)` with
/// `m0` the unforced skeleton's terminal value.
pub fn laplace_limit(beta: f64, m0: f64, q: f64, horizon: f64) -> f64 {
    beta * m0 * m0 / (1.0 + 2.0 * beta * horizon * q * q)
}

/// Monte Carlo estimate of `-eps log E exp(-h(u^eps_T)/eps)`.
pub fn laplace_functional(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    spec: &LaplaceSpec,
    n: usize,
    seed: u64,
) -> Result<LaplaceEstimate> {
    if !(spec.beta >= 0.0 && spec.beta.is_finite()) {
        return Err(invalid(format!("beta must be >= 0, got {}", spec.beta)));
    }
    if spec.mode == 0 || spec.mode > basis.len() {
        return Err(invalid(format!(
            "mode {} outside 1..={}",
            spec.mode,
            basis.len()
        )));
    }
    if n < 2 {
        return Err(invalid("need at least 2 samples"));
    }
    let eps = params.epsilon;
    let m = spec.mode - 1;
    let exponents = par_replicas(n, |r| {
        let (x, _) = sample_terminal(
            basis,
            params,
            chi,
            noise,
            None,
            None,
            StreamKey::new(seed, r),
        )?;
        Ok(-spec.beta * x[m] * x[m] / eps)
    })?;
    // Shift by the largest exponent so the sum cannot underflow.
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Underflow);
    }
    let scaled: Vec<f64> = exponents.iter().map(|e| (e - top).exp()).collect();
    let nf = n as f64;
    let mean = scaled.iter().sum::<f64>() / nf;
    let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(LaplaceEstimate {
        value: -eps * (mean.ln() + top),
        std_error: eps * (var / nf).sqrt() / mean,
        n_samples: n,
        epsilon: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::gaussian::{laplace_value, terminal_law};

    #[test]
    fn zero_beta_is_zero() {
        let b = EigenBasis::build(1, 64).unwrap();
        let noise = NoiseSpec::custom(&b, vec![1.0], 2.0, 0.01).unwrap();
        let chi = SpectralField::new(vec![1.0]).unwrap();
        let p = ModelParams::ns(0.02, 1.0, 1);
        let e = laplace_functional(
            &b,
            &p,
            &chi,
            &noise,
            &LaplaceSpec { beta: 0.0, mode: 1 },
            100,
            1,
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(laplace_limit(1.0, 1.0, 1.0, 1.0), 1.0 / 3.0);
    }

    #[test]
    fn matches_gaussian_value_at_finite_eps() {
        let b = EigenBasis::build(1, 64).unwrap();
        let noise = NoiseSpec::custom(&b, vec![1.0], 2.0, 0.01).unwrap();
        let chi = SpectralField::new(vec![1.0]).unwrap();
        let p = ModelParams::ns(0.05, 1.0, 1);
        let e = laplace_functional(
            &b,
            &p,
            &chi,
            &noise,
            &LaplaceSpec { beta: 1.0, mode: 1 },
            100_000,
            9,
        )
        .unwrap();
        let (m, v) = terminal_law(&p.model().unwrap(), b.lambdas()[0], 1.0, 1.0, 1.0);
        let want = laplace_value(1.0, m, v, 0.05);
        assert!(
            (e.value - want).abs() < 4.0 * e.std_error,
            "{} vs {want}",
            e.value
        );
    }
}
