//! Exact-in-distribution integration of the radial stochastic systems.
//!
//! Each mode is a scalar Ornstein–Uhlenbeck process (see [`crate::semigroup`]),
//! advanced with the exponential integrator
//!
//! ```text
//! v(t+h) = e^{-a h} v(t) + g f (1 - e^{-a h}) / a + s c(a h) dW,
//! c(x)   = sqrt((1 - e^{-2x}) / (2x)),
//! ```
//!
//! where `dW ~ N(0, h)` is the genuine Brownian increment, stored with the
//! trajectory. Rescaling by `c` gives the stochastic convolution its exact
//! one-step variance, so the law at grid times is that of the truncated mild
//! solution; the pathwise gap between `c dW` and the Itô integral is `O(h)`.

use crate::basis::EigenBasis;
use crate::control::ControlPath;
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::noise::NoiseSpec;
use crate::rng::StreamKey;
use crate::semigroup::{phi1, variance_ratio, Model};
use crate::trajectory::{ModelKind, ModelParams, Trajectory};

/// Per-mode one-step coefficients of the exponential integrator.
#[derive(Debug, Clone)]
pub(crate) struct StepCoefficients {
    pub decay: Vec<f64>,
    pub force: Vec<f64>,
    pub noise: Vec<f64>,
}

impl StepCoefficients {
    pub fn new(lambdas: &[f64], model: &Model, q: &[f64], h: f64) -> Self {
        let mut decay = Vec::with_capacity(lambdas.len());
        let mut force = Vec::with_capacity(lambdas.len());
        let mut noise = Vec::with_capacity(lambdas.len());
        for (&l, &qk) in lambdas.iter().zip(q) {
            let a = model.decay_rate(l);
            decay.push((-a * h).exp());
            force.push(model.forcing_gain(l) * phi1(a, h));
            noise.push(model.noise_gain(l, qk) * variance_ratio(a, h));
        }
        Self {
            decay,
            force,
            noise,
        }
    }
}

pub(crate) struct PathOutput {
    /// Time-major states, present when requested.
    pub states: Option<Vec<Vec<f64>>>,
    pub terminal: Vec<f64>,
    pub dw: Option<Vec<Vec<f64>>>,
    pub log_weight: f64,
}

/// Where the Brownian increments come from.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Increments<'a> {
    Stream(StreamKey),
    /// Mode-major table `dw[k][i]`, shared between runs.
    Given(&'a [Vec<f64>]),
}

impl From<StreamKey> for Increments<'_> {
    fn from(key: StreamKey) -> Self {
        Increments::Stream(key)
    }
}

/// Mode-major increment table of one replica.
pub(crate) fn increment_table(
    key: StreamKey,
    n_modes: usize,
    n_steps: usize,
    horizon: f64,
) -> Vec<Vec<f64>> {
    (0..n_modes)
        .map(|k| key.brownian_increments(k as u32, n_steps, horizon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Record {
    Full,
    Terminal,
}

fn check_control(control: &ControlPath, params: &ModelParams, k: usize) -> Result<()> {
    check_len("control steps", params.n_steps, control.n_steps())?;
    check_len("control modes", k, control.n_modes())?;
    let rel = (control.horizon() - params.horizon).abs() / params.horizon;
    if rel > 1e-12 {
        return Err(invalid(format!(
            "control horizon {} differs from simulation horizon {}",
            control.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

fn check_rkhs_span(noise: &NoiseSpec, control: &ControlPath) -> Result<()> {
    for row in control.values() {
        for (k, (f, q)) in row.iter().zip(noise.amplitudes()).enumerate() {
            if *q == 0.0 && *f != 0.0 {
                return Err(Error::OutsideRkhs { mode: k + 1 });
            }
        }
    }
    Ok(())
}

/// Shared integrator. `tilt` shifts the driving Brownian motion by
/// `theta = f / (sqrt(eps) q)` per unit time; the recorded increments are
/// then those of the shifted (tilted-measure) Brownian motion and the
/// returned log-weight is the Girsanov log-density back to the original law.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate(
    lambdas: &[f64],
    params: &ModelParams,
    model: &Model,
    chi: &[f64],
    noise: &NoiseSpec,
    control: Option<&ControlPath>,
    tilt: Option<&ControlPath>,
    source: Increments<'_>,
    record: Record,
) -> Result<PathOutput> {
    let k_modes = lambdas.len();
    let n = params.n_steps;
    let h = params.step();
    let coeffs = StepCoefficients::new(lambdas, model, noise.amplitudes(), h);
    let sqrt_eps = model.epsilon().sqrt();
    let keep_dw = record == Record::Full;

    let mut states = (record == Record::Full).then(|| vec![vec![0.0; k_modes]; n + 1]);
    let mut dw_all = keep_dw.then(|| vec![vec![0.0; k_modes]; n]);
    let mut terminal = vec![0.0; k_modes];
    let mut log_weight = 0.0;
    let mut dw = Vec::with_capacity(n);

    for k in 0..k_modes {
        let q = noise.amplitudes()[k];
        match source {
            Increments::Given(table) => {
                dw.clear();
                dw.extend_from_slice(&table[k]);
            }
            Increments::Stream(key) if keep_dw || q > 0.0 => {
                key.fill_increments(k as u32, n, params.horizon, &mut dw);
            }
            Increments::Stream(_) => {
                dw.clear();
                dw.resize(n, 0.0);
            }
        }
        let mut v = chi[k];
        if let Some(s) = states.as_mut() {
            s[0][k] = v;
        }
        for i in 0..n {
            let f = control.map_or(0.0, |c| c.cell(i)[k]);
            let mut increment = dw[i];
            if let Some(t) = tilt {
                let fk = t.cell(i)[k];
                if fk != 0.0 {
                    let theta = fk / (sqrt_eps * q);
                    log_weight -= theta * dw[i] + 0.5 * theta * theta * h;
                    increment += theta * h;
                }
            }
            v = coeffs.decay[k] * v + coeffs.force[k] * f + coeffs.noise[k] * increment;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    step: i + 1,
                    mode: k + 1,
                });
            }
            if let Some(s) = states.as_mut() {
                s[i + 1][k] = v;
            }
        }
        terminal[k] = v;
        if let Some(d) = dw_all.as_mut() {
            for (row, inc) in d.iter_mut().zip(&dw) {
                row[k] = *inc;
            }
        }
    }
    Ok(PathOutput {
        states,
        terminal,
        dw: dw_all,
        log_weight,
    })
}

struct Validated {
    model: Model,
}

fn validate(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: &ControlPath,
    expected: Option<ModelKind>,
) -> Result<Validated> {
    params.validate()?;
    if let Some(kind) = expected {
        if params.kind != kind {
            return Err(Error::WrongModel {
                expected: kind.name(),
                got: params.kind.name(),
            });
        }
    }
    let model = params.model().ok_or(Error::WrongModel {
        expected: "NS or SG",
        got: params.kind.name(),
    })?;
    let k = basis.len();
    check_len("initial condition", k, chi.len())?;
    check_len("noise", k, noise.len())?;
    check_control(control, params, k)?;
    check_rkhs_span(noise, control)?;
    Ok(Validated { model })
}

fn assemble(
    basis: &EigenBasis,
    params: &ModelParams,
    out: PathOutput,
    key: StreamKey,
    control: Option<&ControlPath>,
) -> Trajectory {
    Trajectory {
        times: params.times(),
        states: out
            .states
            .expect("full record")
            .into_iter()
            .map(SpectralField::from_vec_unchecked)
            .collect(),
        dw: out.dw,
        params: *params,
        seed: key.seed,
        replica: key.replica,
        lambdas: basis.lambdas().to_vec(),
        control: control.cloned(),
    }
}

fn simulate_kind(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: &ControlPath,
    key: StreamKey,
    kind: Option<ModelKind>,
) -> Result<Trajectory> {
    let v = validate(basis, params, chi, noise, control, kind)?;
    let out = integrate(
        basis.lambdas(),
        params,
        &v.model,
        chi.coeffs(),
        noise,
        Some(control),
        None,
        key.into(),
        Record::Full,
    )?;
    Ok(assemble(basis, params, out, key, Some(control)))
}

/// Radial stochastic Navier–Stokes with forcing `control`, noise `sqrt(eps) W`.
pub fn simulate_radial_ns(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: &ControlPath,
    key: impl Into<StreamKey>,
) -> Result<Trajectory> {
    simulate_kind(
        basis,
        params,
        chi,
        noise,
        control,
        key.into(),
        Some(ModelKind::NavierStokes),
    )
}

/// Radial stochastic second-grade fluid; the state is the velocity `u`,
/// while forcing and noise act on `v = (I - eps A) u`.
pub fn simulate_radial_sg(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: &ControlPath,
    key: impl Into<StreamKey>,
) -> Result<Trajectory> {
    simulate_kind(
        basis,
        params,
        chi,
        noise,
        control,
        key.into(),
        Some(ModelKind::SecondGrade),
    )
}

/// Dispatches on `params.kind` (Navier–Stokes or second grade).
pub fn simulate(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: &ControlPath,
    key: impl Into<StreamKey>,
) -> Result<Trajectory> {
    simulate_kind(basis, params, chi, noise, control, key.into(), None)
}

/// Simulates the uncontrolled system under the measure that shifts the
/// Brownian drift by `tilt`, returning the path and the log-likelihood
/// ratio
/// `-(1/sqrt(eps)) sum (f/q) dW - (1/(2 eps)) sum h ||f||_{H0}^2`
/// so that `E_tilted[1_A e^{log_weight}] = P(A)`.
pub fn tilted_simulate(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    tilt: &ControlPath,
    key: impl Into<StreamKey>,
) -> Result<(Trajectory, f64)> {
    let key = key.into();
    let v = validate(basis, params, chi, noise, tilt, None)?;
    let out = integrate(
        basis.lambdas(),
        params,
        &v.model,
        chi.coeffs(),
        noise,
        None,
        Some(tilt),
        key.into(),
        Record::Full,
    )?;
    let lw = out.log_weight;
    Ok((assemble(basis, params, out, key, None), lw))
}

/// Terminal state (and log-weight when tilted) without storing the path.
#[allow(clippy::too_many_arguments)]
pub fn sample_terminal(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &SpectralField,
    noise: &NoiseSpec,
    control: Option<&ControlPath>,
    tilt: Option<&ControlPath>,
    key: StreamKey,
) -> Result<(Vec<f64>, f64)> {
    let zero;
    let c = match control {
        Some(c) => c,
        None => {
            zero = ControlPath::zero(basis.len(), params.n_steps, params.horizon);
            &zero
        }
    };
    let v = validate(basis, params, chi, noise, c, None)?;
    if let Some(t) = tilt {
        check_control(t, params, basis.len())?;
        check_rkhs_span(noise, t)?;
    }
    let out = integrate(
        basis.lambdas(),
        params,
        &v.model,
        chi.coeffs(),
        noise,
        control,
        tilt,
        key.into(),
        Record::Terminal,
    )?;
    Ok((out.terminal, out.log_weight))
}

/// Radial Euler skeleton `u_t = chi + int_0^t f_s ds`: the self-advection of
/// a circular flow is a pure gradient, so the control integrates exactly.
/// `n_steps` must be a multiple of the control's cell count.
pub fn euler_skeleton(
    chi: &SpectralField,
    control: &ControlPath,
    n_steps: usize,
) -> Result<Trajectory> {
    check_len("control modes", chi.len(), control.n_modes())?;
    if n_steps == 0 || !n_steps.is_multiple_of(control.n_steps()) {
        return Err(invalid(format!(
            "n_steps = {n_steps} is not a multiple of the control's {} cells",
            control.n_steps()
        )));
    }
    let control = control.refined(n_steps / control.n_steps());
    let params = ModelParams::euler(control.horizon(), n_steps);
    let states = control
        .integral()
        .into_iter()
        .map(|f| {
            SpectralField::from_vec_unchecked(
                f.iter().zip(chi.coeffs()).map(|(f, c)| c + f).collect(),
            )
        })
        .collect();
    Ok(Trajectory {
        times: params.times(),
        states,
        dw: Some(vec![vec![0.0; chi.len()]; n_steps]),
        params,
        seed: 0,
        replica: 0,
        lambdas: Vec::new(),
        control: Some(control),
    })
}

/// Deterministic mild convolution `z_t = int_0^t e^{(t-s) L} G f_s ds` of the
/// control, with `G = I` (Navier–Stokes) or `(I - eps A)^{-1}` (second
/// grade). Exact at grid times for piecewise-constant controls.
pub fn mild_forcing(
    basis: &EigenBasis,
    params: &ModelParams,
    control: &ControlPath,
) -> Result<Trajectory> {
    params.validate()?;
    let model = params.model().ok_or(Error::WrongModel {
        expected: "NS or SG",
        got: params.kind.name(),
    })?;
    check_control(control, params, basis.len())?;
    let zero_noise = NoiseSpec::zero(basis.len());
    let out = integrate(
        basis.lambdas(),
        params,
        &model,
        &vec![0.0; basis.len()],
        &zero_noise,
        Some(control),
        None,
        StreamKey::new(0, 0).into(),
        Record::Full,
    )?;
    let mut traj = assemble(basis, params, out, StreamKey::new(0, 0), Some(control));
    traj.dw = Some(vec![vec![0.0; basis.len()]; params.n_steps]);
    Ok(traj)
}
