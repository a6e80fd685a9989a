//! Ensemble studies over the noise intensity or the time step.
//!
//! Replicas run in parallel; each depends only on `(seed, replica)`, and
//! per-replica results are reduced in replica order so every study is
//! bit-reproducible regardless of the thread count. Within a sweep all
//! intensities share the same Brownian paths.

use crate::basis::EigenBasis;
use crate::control::ControlPath;
use crate::diagnostics::energy::{
    energy_balance_gap, energy_residual_ns, energy_residual_sg, viscous_dissipation, Identity,
    SgNorm,
};
use crate::diagnostics::kato::{KatoOperator, KatoSpec};
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::io::CsvTable;
use crate::noise::NoiseSpec;
use crate::rng::StreamKey;
use crate::sde::{increment_table, integrate, mild_forcing, simulate, Increments, Record};
use crate::stats::{fit_slope, rms, MeanEstimate, SlopeFit};
use crate::trajectory::{ModelKind, ModelParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub(crate) fn par_replicas<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u32) -> Result<T> + Sync + Send,
{
    (0..n as u32).into_par_iter().map(f).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sup_sq(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.len() < 3 {
        return Err(invalid("a sweep needs at least 3 intensities"));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(invalid(format!("intensity {e} must be > 0")));
    }
    Ok(())
}

fn deterministic_path(
    basis: &EigenBasis,
    params: &ModelParams,
    chi: &[f64],
    control: Option<&ControlPath>,
) -> Result<Vec<Vec<f64>>> {
    let model = params.model().ok_or(Error::WrongModel {
        expected: "NS or SG",
        got: params.kind.name(),
    })?;
    let out = integrate(
        basis.lambdas(),
        params,
        &model,
        chi,
        &NoiseSpec::zero(basis.len()),
        control,
        None,
        StreamKey::new(0, 0).into(),
        Record::Full,
    )?;
    Ok(out.states.expect("full record"))
}

/// Inputs shared by every intensity of an inviscid-limit sweep.
#[derive(Debug, Clone)]
pub struct InviscidSpec {
    /// Model, horizon and grid; `epsilon` is replaced per sweep point and
    /// `nu / epsilon` is kept fixed.
    pub base: ModelParams,
    pub chi: SpectralField,
    /// `chi^eps = chi + sqrt(eps) * chi_perturbation`.
    pub chi_perturbation: Option<SpectralField>,
    pub control: Option<ControlPath>,
    pub n_paths: usize,
    pub seed: u64,
}

/// Per-intensity attribution of `sup_t ||u^eps_t - u_t||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InviscidRow {
    pub epsilon: f64,
    pub mean_sup_sq: f64,
    pub std_error: f64,
    /// `sup ||S_t (chi^eps - chi)||^2`.
    pub initial_term: f64,
    /// `sup ||(S_t - I) chi||^2`.
    pub semigroup_term: f64,
    /// `sup ||z^eps_t - F_t||^2`.
    pub forcing_term: f64,
    /// Mean of `sup ||stochastic convolution||^2`.
    pub stochastic_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InviscidSweep {
    pub rows: Vec<InviscidRow>,
    /// Fit of `mean_sup_sq` against `epsilon` (absent if any mean vanishes).
    pub fit: Option<SlopeFit>,
    pub semigroup_fit: Option<SlopeFit>,
    pub stochastic_fit: Option<SlopeFit>,
}

impl InviscidSweep {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "epsilon",
            "mean_sup_sq_error",
            "std_error",
            "initial_term",
            "semigroup_term",
            "forcing_term",
            "stochastic_term",
        ]);
        for r in &self.rows {
            t.push_numbers(&[
                r.epsilon,
                r.mean_sup_sq,
                r.std_error,
                r.initial_term,
                r.semigroup_term,
                r.forcing_term,
                r.stochastic_term,
            ]);
        }
        t
    }
}

/// Fit that is reported only when every ordinate is positive.
fn optional_fit(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    fit_slope(xs, ys).ok()
}

/// Mean `sup_t ||u^eps_t - u_t||^2` against the Euler skeleton `u` for
/// each `eps`, with the four-term decomposition
/// `u^eps - u = S(chi^eps - chi) + (S - I) chi + (z^eps - F) + stochastic`.
pub fn inviscid_sweep(
    basis: &EigenBasis,
    noise: &NoiseSpec,
    spec: &InviscidSpec,
    epsilons: &[f64],
) -> Result<InviscidSweep> {
    check_epsilons(epsilons)?;
    let k = basis.len();
    let base = spec.base;
    base.validate()?;
    check_len("initial condition", k, spec.chi.len())?;
    check_len("noise", k, noise.len())?;
    if let Some(p) = &spec.chi_perturbation {
        check_len("initial perturbation", k, p.len())?;
    }
    if spec.n_paths == 0 {
        return Err(invalid("n_paths must be >= 1"));
    }
    let n = base.n_steps;
    let zero = ControlPath::zero(k, n, base.horizon);
    let control = spec.control.as_ref().unwrap_or(&zero);
    let chi = spec.chi.coeffs();
    let skeleton_increments = control.integral();
    if skeleton_increments.len() != n + 1 {
        return Err(Error::Dimension {
            what: "control steps",
            expected: n,
            got: control.n_steps(),
        });
    }
    let skeleton: Vec<Vec<f64>> = skeleton_increments
        .iter()
        .map(|f| f.iter().zip(chi).map(|(f, c)| f + c).collect())
        .collect();

    struct Point {
        params: ModelParams,
        model: crate::semigroup::Model,
        chi_eps: Vec<f64>,
        initial: Vec<Vec<f64>>,
        defect: Vec<Vec<f64>>,
        forcing: Vec<Vec<f64>>,
        /// Deterministic part of `u^eps`: `S chi^eps + z^eps`.
        mean_path: Vec<Vec<f64>>,
    }
    let points = epsilons
        .iter()
        .map(|&eps| {
            let params = base.at_epsilon(eps);
            params.validate()?;
            let model = params.model().ok_or(Error::WrongModel {
                expected: "NS or SG",
                got: params.kind.name(),
            })?;
            let chi_eps: Vec<f64> = match &spec.chi_perturbation {
                Some(p) => chi
                    .iter()
                    .zip(p.coeffs())
                    .map(|(c, d)| c + eps.sqrt() * d)
                    .collect(),
                None => chi.to_vec(),
            };
            let shift: Vec<f64> = chi_eps.iter().zip(chi).map(|(a, b)| a - b).collect();
            let initial = deterministic_path(basis, &params, &shift, None)?;
            let free = deterministic_path(basis, &params, chi, None)?;
            let defect: Vec<Vec<f64>> = free
                .iter()
                .map(|s| s.iter().zip(chi).map(|(a, b)| a - b).collect())
                .collect();
            let z = mild_forcing(basis, &params, control)?;
            let forcing: Vec<Vec<f64>> = z
                .states
                .iter()
                .zip(&skeleton_increments)
                .map(|(z, f)| z.coeffs().iter().zip(f).map(|(a, b)| a - b).collect())
                .collect();
            let mean_path = free
                .iter()
                .zip(&initial)
                .zip(&z.states)
                .map(|((a, b), c)| {
                    a.iter()
                        .zip(b)
                        .zip(c.coeffs())
                        .map(|((a, b), c)| a + b + c)
                        .collect()
                })
                .collect();
            Ok(Point {
                params,
                model,
                chi_eps,
                initial,
                defect,
                forcing,
                mean_path,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // One Brownian path per replica, shared by every intensity.
    let per_path = par_replicas(spec.n_paths, |r| {
        let dw = increment_table(StreamKey::new(spec.seed, r), k, n, base.horizon);
        points
            .iter()
            .map(|p| {
                let out = integrate(
                    basis.lambdas(),
                    &p.params,
                    &p.model,
                    &p.chi_eps,
                    noise,
                    Some(control),
                    None,
                    Increments::Given(&dw),
                    Record::Full,
                )?;
                let states = out.states.expect("full record");
                let mut err: f64 = 0.0;
                let mut stoch: f64 = 0.0;
                for ((u, ubar), m) in states.iter().zip(&skeleton).zip(&p.mean_path) {
                    err = err.max(sq_dist(u, ubar));
                    stoch = stoch.max(sq_dist(u, m));
                }
                Ok((err, stoch))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<InviscidRow> = points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let errs: Vec<f64> = per_path.iter().map(|v| v[j].0).collect();
            let stoch: Vec<f64> = per_path.iter().map(|v| v[j].1).collect();
            let est = MeanEstimate::from_samples(&errs);
            InviscidRow {
                epsilon: p.params.epsilon,
                mean_sup_sq: est.mean,
                std_error: est.std_error,
                initial_term: sup_sq(&p.initial),
                semigroup_term: sup_sq(&p.defect),
                forcing_term: sup_sq(&p.forcing),
                stochastic_term: MeanEstimate::from_samples(&stoch).mean,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let col = |f: fn(&InviscidRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(InviscidSweep {
        fit: optional_fit(&xs, &col(|r| r.mean_sup_sq)),
        semigroup_fit: optional_fit(&xs, &col(|r| r.semigroup_term)),
        stochastic_fit: optional_fit(&xs, &col(|r| r.stochastic_term)),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingRow {
    pub epsilon: f64,
    /// `sup_t ||z^eps_t - F_t||` in `D((-A)^smoothness)`.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSweep {
    pub smoothness: f64,
    pub rows: Vec<ForcingRow>,
    pub fit: SlopeFit,
}

impl ForcingSweep {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["epsilon", "sup_norm", "smoothness"]);
        for r in &self.rows {
            t.push_numbers(&[r.epsilon, r.sup_norm, self.smoothness]);
        }
        t
    }
}

/// Distance between the viscous mild convolution of `control` and its
/// inviscid limit `F_t = int_0^t f_s ds`, measured in `D((-A)^smoothness)`.
pub fn forcing_sweep(
    basis: &EigenBasis,
    base: &ModelParams,
    control: &ControlPath,
    smoothness: f64,
    epsilons: &[f64],
) -> Result<ForcingSweep> {
    check_epsilons(epsilons)?;
    let f_int = control.integral();
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let z = mild_forcing(basis, &base.at_epsilon(eps), control)?;
            let sup = z
                .states
                .iter()
                .zip(&f_int)
                .map(|(z, f)| {
                    let d: Vec<f64> = z.coeffs().iter().zip(f).map(|(a, b)| a - b).collect();
                    crate::basis::sobolev_norm(basis.lambdas(), &d, smoothness)
                })
                .fold(0.0, f64::max);
            Ok(ForcingRow {
                epsilon: eps,
                sup_norm: sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    Ok(ForcingSweep {
        smoothness,
        fit: fit_slope(&xs, &ys)?,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoRow {
    pub epsilon: f64,
    pub c: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Mean of `2 eps int ||grad u||^2` over the whole disk.
    pub mean_dissipation: f64,
    /// Largest `|gap - residual(T)|` over the ensemble.
    pub gap_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoSweep {
    pub rows: Vec<KatoRow>,
    /// One fit per strip constant, in the order given.
    pub fits: Vec<(f64, SlopeFit)>,
    pub dissipation_fit: SlopeFit,
}

impl KatoSweep {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "epsilon",
            "c",
            "K_value",
            "std_error",
            "mean_dissipation",
            "gap_mismatch",
        ]);
        for r in &self.rows {
            t.push_numbers(&[
                r.epsilon,
                r.c,
                r.mean,
                r.std_error,
                r.mean_dissipation,
                r.gap_mismatch,
            ]);
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct KatoSweepSpec {
    pub base: ModelParams,
    pub chi: SpectralField,
    pub cs: Vec<f64>,
    pub annulus_panels: usize,
    pub n_paths: usize,
    pub seed: u64,
}

/// Ensemble mean of the strip dissipation for every `(eps, c)`.
pub fn kato_sweep(
    basis: &EigenBasis,
    noise: &NoiseSpec,
    spec: &KatoSweepSpec,
    epsilons: &[f64],
) -> Result<KatoSweep> {
    check_epsilons(epsilons)?;
    if spec.base.kind != ModelKind::NavierStokes {
        return Err(Error::WrongModel {
            expected: ModelKind::NavierStokes.name(),
            got: spec.base.kind.name(),
        });
    }
    if spec.cs.is_empty() || spec.n_paths == 0 {
        return Err(invalid("kato sweep needs strip constants and paths"));
    }
    let k = basis.len();
    let zero = ControlPath::zero(k, spec.base.n_steps, spec.base.horizon);
    let mut rows = Vec::new();
    for &eps in epsilons {
        let params = spec.base.at_epsilon(eps);
        let ops = spec
            .cs
            .iter()
            .map(|&c| {
                KatoOperator::new(
                    basis,
                    KatoSpec {
                        c,
                        epsilon: eps,
                        annulus_panels: spec.annulus_panels,
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let per_path = par_replicas(spec.n_paths, |r| {
            let t = simulate(
                basis,
                &params,
                &spec.chi,
                noise,
                &zero,
                StreamKey::new(spec.seed, r),
            )?;
            let values = ops
                .iter()
                .map(|op| op.functional(&t))
                .collect::<Result<Vec<_>>>()?;
            let diss = viscous_dissipation(&t)?;
            let gap = energy_balance_gap(&t, noise, &zero)?;
            let res = energy_residual_ns(&t, noise)?.terminal();
            Ok((values, diss, (gap - res).abs()))
        })?;
        let diss: Vec<f64> = per_path.iter().map(|p| p.1).collect();
        let mismatch = per_path.iter().map(|p| p.2).fold(0.0, f64::max);
        let mean_dissipation = MeanEstimate::from_samples(&diss).mean;
        for (j, &c) in spec.cs.iter().enumerate() {
            let v: Vec<f64> = per_path.iter().map(|p| p.0[j]).collect();
            let est = MeanEstimate::from_samples(&v);
            rows.push(KatoRow {
                epsilon: eps,
                c,
                mean: est.mean,
                std_error: est.std_error,
                mean_dissipation,
                gap_mismatch: mismatch,
            });
        }
    }
    let mut fits = Vec::new();
    for &c in &spec.cs {
        let sel: Vec<&KatoRow> = rows.iter().filter(|r| r.c == c).collect();
        let xs: Vec<f64> = sel.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = sel.iter().map(|r| r.mean).collect();
        fits.push((c, fit_slope(&xs, &ys)?));
    }
    let first_c = spec.cs[0];
    let sel: Vec<&KatoRow> = rows.iter().filter(|r| r.c == first_c).collect();
    let dissipation_fit = fit_slope(
        &sel.iter().map(|r| r.epsilon).collect::<Vec<_>>(),
        &sel.iter().map(|r| r.mean_dissipation).collect::<Vec<_>>(),
    )?;
    Ok(KatoSweep {
        rows,
        fits,
        dissipation_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n_steps: usize,
    pub step: f64,
    /// RMS over paths of the terminal residual.
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub identity: Identity,
    pub rows: Vec<RefinementRow>,
    /// Fit of the RMS residual against the step size.
    pub fit: SlopeFit,
}

impl RefinementStudy {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["n_steps", "h", "rms_residual"]);
        for r in &self.rows {
            t.push_numbers(&[r.n_steps as f64, r.step, r.rms_residual]);
        }
        t
    }
}

/// Terminal energy-identity residual under grid refinement, on coupled
/// Brownian paths (replica `r` uses the same path at every resolution).
#[allow(clippy::too_many_arguments)]
pub fn identity_refinement(
    basis: &EigenBasis,
    noise: &NoiseSpec,
    chi: &SpectralField,
    base: &ModelParams,
    identity: Identity,
    n_steps_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<RefinementStudy> {
    if n_steps_list.len() < 3 {
        return Err(invalid("a refinement study needs at least 3 grids"));
    }
    if n_paths == 0 {
        return Err(invalid("n_paths must be >= 1"));
    }
    let expected = match identity {
        Identity::NavierStokes => ModelKind::NavierStokes,
        Identity::SecondGradeV | Identity::SecondGradeVorticity => ModelKind::SecondGrade,
        Identity::Euler => return Err(invalid("the Euler identity has no stochastic refinement")),
    };
    if base.kind != expected {
        return Err(Error::WrongModel {
            expected: expected.name(),
            got: base.kind.name(),
        });
    }
    let k = basis.len();
    let mut rows = Vec::new();
    for &n in n_steps_list {
        let params = base.with_n_steps(n);
        let zero = ControlPath::zero(k, n, params.horizon);
        let res = par_replicas(n_paths, |r| {
            let t = simulate(basis, &params, chi, noise, &zero, StreamKey::new(seed, r))?;
            let series = match identity {
                Identity::NavierStokes => energy_residual_ns(&t, noise)?,
                Identity::SecondGradeV => energy_residual_sg(&t, noise, SgNorm::VNorm)?,
                _ => energy_residual_sg(&t, noise, SgNorm::Vorticity)?,
            };
            Ok(series.terminal())
        })?;
        rows.push(RefinementRow {
            n_steps: n,
            step: params.step(),
            rms_residual: rms(&res),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.step).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rms_residual).collect();
    Ok(RefinementStudy {
        identity,
        fit: fit_slope(&xs, &ys)?,
        rows,
    })
}
