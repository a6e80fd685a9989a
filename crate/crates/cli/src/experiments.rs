use crate::config::{ControlKind, EventChoice, Experiment, ExperimentConfig, Initial, Kind};
use crate::report::{Check, Report, Window};
use ldplab_core::basis::min_panels;
use ldplab_core::diagnostics::{corrector_scaling_check, Identity, PowerProfile};
use ldplab_core::io::CsvTable;
use ldplab_core::ldp::gaussian::{exceed_probability, laplace_value, terminal_law};
use ldplab_core::ldp::{
    laplace_functional, laplace_limit, ldp_convergence_study, rate_functional, LaplaceSpec,
    RareEventSpec,
};
use ldplab_core::quadrature::Quadrature;
use ldplab_core::rng::philox4x32_10;
use ldplab_core::sweep::{
    forcing_sweep, identity_refinement, inviscid_sweep, kato_sweep, InviscidSpec, KatoSweepSpec,
};
use ldplab_core::{
    euler_skeleton, ControlPath, EigenBasis, ModelParams, NoiseSpec, Result, SpectralField,
    StreamKey,
};
use std::f64::consts::PI;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::BasisCheck => basis_check(cfg),
        Experiment::InviscidSweep => inviscid(cfg),
        Experiment::ForcingRate | Experiment::SgForcingRate => forcing(cfg),
        Experiment::IdentityRefinement => refinement(cfg),
        Experiment::KatoSweep => kato(cfg),
        Experiment::CorrectorSweep => corrector(cfg),
        Experiment::RareEvent => rare_event(cfg),
        Experiment::Laplace => laplace(cfg),
        Experiment::RateRoundtrip => rate_roundtrip(cfg),
    }
}

fn basis(cfg: &ExperimentConfig) -> Result<EigenBasis> {
    let k = cfg.noise.k;
    match &cfg.basis_file {
        Some(p) => {
            let b = EigenBasis::load(p)?;
            if b.len() != k {
                return Err(ldplab_core::Error::Dimension {
                    what: "basis file modes",
                    expected: k,
                    got: b.len(),
                });
            }
            Ok(b)
        }
        None => EigenBasis::build(k, min_panels(k)),
    }
}

fn noise(cfg: &ExperimentConfig, basis: &EigenBasis) -> Result<NoiseSpec> {
    let n = &cfg.noise;
    if n.scale == 0.0 {
        return Ok(NoiseSpec::zero(basis.len()));
    }
    let spec = match &n.amplitudes {
        Some(q) => NoiseSpec::custom(basis, q.clone(), n.gamma, n.delta_reg)?,
        None => NoiseSpec::canonical(basis, n.gamma, n.delta_reg)?,
    };
    Ok(if n.scale == 1.0 {
        spec
    } else {
        spec.scaled(n.scale)
    })
}

fn initial(cfg: &ExperimentConfig) -> Result<SpectralField> {
    let k = cfg.noise.k;
    match &cfg.initial {
        Initial::Zero => Ok(SpectralField::zeros(k)),
        Initial::Unit(j) => SpectralField::unit(k, *j),
        Initial::Coeffs(c) => SpectralField::new(c.clone()),
    }
}

fn params(cfg: &ExperimentConfig, epsilon: f64) -> ModelParams {
    let m = &cfg.model;
    match cfg.kind() {
        Kind::NavierStokes => ModelParams::ns(epsilon, m.horizon, m.n_steps),
        Kind::SecondGrade => ModelParams::sg(epsilon, m.nu_ratio * epsilon, m.horizon, m.n_steps),
    }
}

fn control(cfg: &ExperimentConfig, noise: &NoiseSpec) -> Result<ControlPath> {
    let (k, n, t) = (cfg.noise.k, cfg.model.n_steps, cfg.model.horizon);
    match cfg.control_kind() {
        ControlKind::Zero => Ok(ControlPath::zero(k, n, t)),
        ControlKind::NoiseAligned => ControlPath::constant(noise.amplitudes(), n, t, noise),
    }
}

/// `(max_b |G_ab - delta_ab|, |energy_a - lambda_a| / lambda_a)` per mode on
/// a rule with `panels` panels.
fn basis_rows(basis: &EigenBasis, panels: usize) -> Result<Vec<(f64, f64)>> {
    let quad = Quadrature::composite(0.0, 1.0, panels, 8)?;
    let nodes = quad.nodes();
    let modes = basis.modes();
    let values: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| nodes.iter().map(|&r| m.value(r)).collect())
        .collect();
    Ok(modes
        .iter()
        .enumerate()
        .map(|(a, m)| {
            let gram = (0..modes.len())
                .map(|b| {
                    let g: f64 = 2.0
                        * PI
                        * nodes
                            .iter()
                            .zip(quad.weights())
                            .enumerate()
                            .map(|(i, (r, w))| w * r * values[a][i] * values[b][i])
                            .sum::<f64>();
                    (g - if a == b { 1.0 } else { 0.0 }).abs()
                })
                .fold(0.0, f64::max);
            let energy = 2.0
                * PI
                * quad.integrate(|r| {
                    let d = m.derivative(r);
                    let v = m.value_over_r(r);
                    (d * d + v * v) * r
                });
            (gram, (energy - m.eigenvalue).abs() / m.eigenvalue)
        })
        .collect())
}

fn column_max(t: &CsvTable, name: &str) -> f64 {
    t.column(name)
        .map(|c| c.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

fn basis_check(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let own = basis_rows(&b, b.panels())?;
    let fine = basis_rows(&b, 2 * b.panels())?;
    let mut t = CsvTable::new(&[
        "mode",
        "bessel_zero",
        "lambda",
        "gram_row_deviation",
        "gram_row_deviation_fine",
        "eigen_residual",
        "eigen_residual_fine",
    ]);
    for (i, (m, (o, f))) in b.modes().iter().zip(own.iter().zip(&fine)).enumerate() {
        t.push_numbers(&[
            (i + 1) as f64,
            m.eigenvalue.sqrt(),
            m.eigenvalue,
            o.0,
            f.0,
            o.1,
            f.1,
        ]);
    }
    let mut r = Report::default();
    for (name, col, tol) in [
        ("gram_deviation", "gram_row_deviation", 1e-10),
        ("gram_deviation_fine", "gram_row_deviation_fine", 1e-10),
        ("eigen_residual", "eigen_residual", 1e-8),
        ("eigen_residual_fine", "eigen_residual_fine", 1e-8),
    ] {
        r.check(Check::new(
            name,
            column_max(&t, col),
            Window::AtMost { max: tol },
            format!("max of basis.csv:{col}"),
        ));
    }
    r.table("basis.csv", t);
    Ok(r)
}

fn inviscid(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let ctrl = control(cfg, &q)?;
    let spec = InviscidSpec {
        base: params(cfg, cfg.epsilons[0]),
        chi: initial(cfg)?,
        chi_perturbation: None,
        control: (!ctrl.is_zero()).then_some(ctrl),
        n_paths: cfg.n_samples,
        seed: cfg.seed,
    };
    let sweep = inviscid_sweep(&b, &q, &spec, &cfg.epsilons)?;
    let mut r = Report::default();
    for (name, fit) in [
        ("mean_sup_sq_error", sweep.fit),
        ("semigroup_term", sweep.semigroup_fit),
        ("stochastic_term", sweep.stochastic_fit),
    ] {
        if let Some(f) = fit {
            r.fit(name, f);
        }
    }
    let slope = sweep.fit.map_or(f64::NAN, |f| f.slope);
    let source = "log-log slope of inviscid.csv:mean_sup_sq_error against epsilon";
    if q.trace_q() == 0.0 {
        r.check(Check::new(
            "semigroup_slope",
            slope,
            Window::Range { min: 1.8, max: 2.2 },
            source,
        ));
    } else if spec.control.is_none() && spec.chi.l2_norm() == 0.0 {
        r.check(Check::new(
            "noise_slope",
            slope,
            Window::Range { min: 0.8, max: 1.2 },
            source,
        ));
    }
    r.table("inviscid.csv", sweep.table());
    Ok(r)
}

fn forcing(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let ctrl = control(cfg, &q)?;
    let gamma = cfg.noise.gamma;
    let (smoothness, window) = match cfg.kind() {
        Kind::NavierStokes => (gamma - 0.5 - cfg.theta, Window::AtLeast { min: 0.5 }),
        Kind::SecondGrade => (gamma - 2.0 * cfg.theta, Window::AtLeast { min: cfg.theta }),
    };
    let sweep = forcing_sweep(
        &b,
        &params(cfg, cfg.epsilons[0]),
        &ctrl,
        smoothness,
        &cfg.epsilons,
    )?;
    let mut r = Report::default();
    r.fit("sup_norm", sweep.fit);
    r.estimate("smoothness", smoothness);
    r.check(Check::new(
        "forcing_slope",
        sweep.fit.slope,
        window,
        "log-log slope of forcing.csv:sup_norm against epsilon",
    ));
    r.table("forcing.csv", sweep.table());
    Ok(r)
}

fn refinement(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let chi = initial(cfg)?;
    let base = params(cfg, cfg.model.epsilon);
    let identities: &[(Identity, &str)] = match cfg.kind() {
        Kind::NavierStokes => &[(Identity::NavierStokes, "navier_stokes")],
        Kind::SecondGrade => &[
            (Identity::SecondGradeV, "second_grade_v"),
            (Identity::SecondGradeVorticity, "second_grade_vorticity"),
        ],
    };
    let min = if q.trace_q() == 0.0 { 0.9 } else { 0.5 };
    let mut r = Report::default();
    for &(identity, name) in identities {
        let study = identity_refinement(
            &b,
            &q,
            &chi,
            &base,
            identity,
            &cfg.n_steps_list,
            cfg.n_samples,
            cfg.seed,
        )?;
        let file = format!("refinement_{name}.csv");
        r.fit(name, study.fit);
        r.check(Check::new(
            &format!("{name}_exponent"),
            study.fit.slope,
            Window::AtLeast { min },
            format!("log-log slope of {file}:rms_residual against h"),
        ));
        r.table(&file, study.table());
    }
    Ok(r)
}

fn kato(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let spec = KatoSweepSpec {
        base: params(cfg, cfg.epsilons[0]),
        chi: initial(cfg)?,
        cs: cfg.cs.clone(),
        annulus_panels: cfg.annulus_panels,
        n_paths: cfg.n_samples,
        seed: cfg.seed,
    };
    let sweep = kato_sweep(&b, &q, &spec, &cfg.epsilons)?;
    let mut r = Report::default();
    for (c, fit) in &sweep.fits {
        let name = format!("kato_c{c}");
        r.fit(&name, *fit);
        r.check(Check::new(
            &format!("{name}_slope"),
            fit.slope,
            Window::AtLeast { min: 0.9 },
            format!("log-log slope of kato.csv:K_value against epsilon, rows with c = {c}"),
        ));
    }
    r.fit("dissipation", sweep.dissipation_fit);
    let mismatch = sweep
        .rows
        .iter()
        .map(|x| x.gap_mismatch)
        .fold(0.0, f64::max);
    r.check(Check::new(
        "gap_minus_residual",
        mismatch,
        Window::AtMost { max: 1e-12 },
        "max of kato.csv:gap_mismatch",
    ));
    r.table("kato.csv", sweep.table());
    Ok(r)
}

fn corrector(cfg: &ExperimentConfig) -> Result<Report> {
    let c = &cfg.corrector;
    let profile = PowerProfile {
        amplitude: c.amplitude,
        power: c.power,
    };
    let s = corrector_scaling_check(&profile, c.cutoff, &cfg.deltas)?;
    let mut t = CsvTable::new(&["delta", "l2", "grad_l2", "linf", "weighted_grad_linf"]);
    for row in &s.rows {
        t.push_numbers(&[
            row.delta,
            row.l2,
            row.grad_l2,
            row.linf,
            row.weighted_grad_linf,
        ]);
    }
    let mut r = Report::default();
    for (name, fit, target) in [
        ("l2", s.l2, 0.5),
        ("grad_l2", s.grad_l2, -0.5),
        ("linf", s.linf, 0.0),
    ] {
        r.fit(name, fit);
        r.check(Check::new(
            &format!("{name}_exponent"),
            fit.slope,
            Window::Absolute { target, tol: 0.1 },
            format!("log-log slope of corrector.csv:{name} against delta"),
        ));
    }
    r.table("corrector.csv", t);
    Ok(r)
}

fn rare_event(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let chi = initial(cfg)?;
    let re = &cfg.rare_event;
    // The unforced skeleton stays at chi.
    let spec = match re.event {
        EventChoice::SingleMode => RareEventSpec::single_mode(re.rho, re.mode, chi.clone())?,
        EventChoice::TerminalBall => RareEventSpec::terminal_ball(re.rho, chi.clone())?,
    };
    let base = params(cfg, cfg.epsilons[0]);
    let study = ldp_convergence_study(
        &b,
        &base,
        &chi,
        &q,
        &spec,
        &cfg.epsilons,
        cfg.n_samples,
        re.method,
        cfg.seed,
    )?;
    let mut r = Report::default();
    r.estimate("rate_prediction", study.rate_prediction);
    r.estimate("richardson_limit", study.extrapolated);
    r.check(Check::new(
        "richardson_vs_rate",
        study.extrapolated,
        Window::Relative {
            target: study.rate_prediction,
            tol: 0.15,
        },
        "richardson of the last two rare_event.csv rows: (2 v_fine - v_coarse) for halving eps",
    ));
    if re.event == EventChoice::SingleMode {
        let m = re.mode - 1;
        let mut t = CsvTable::new(&["epsilon", "exact_p", "exact_neg_eps_log_p"]);
        let mut last = f64::NAN;
        for &eps in &cfg.epsilons {
            let model = params(cfg, eps).model().expect("viscous model");
            let (mean, var) = terminal_law(
                &model,
                b.lambdas()[m],
                q.amplitudes()[m],
                chi.coeffs()[m],
                base.horizon,
            );
            let p = exceed_probability(mean, var, chi.coeffs()[m], re.rho);
            last = -eps * p.ln();
            t.push_numbers(&[eps, p, last]);
        }
        let got = study
            .rows
            .last()
            .map_or(f64::NAN, |row| row.estimate.neg_eps_log_p);
        r.estimate("exact_neg_eps_log_p", last);
        r.check(Check::new(
            "smallest_eps_vs_exact",
            got,
            Window::Relative {
                target: last,
                tol: 0.1,
            },
            "last row of rare_event.csv:neg_eps_log_p against rare_event_oracle.csv:exact_neg_eps_log_p",
        ));
        r.table("rare_event_oracle.csv", t);
    }
    r.table("rare_event.csv", study.table());
    Ok(r)
}

fn laplace(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let q = noise(cfg, &b)?;
    let chi = initial(cfg)?;
    let l = &cfg.laplace;
    let p = params(cfg, cfg.model.epsilon);
    let spec = LaplaceSpec {
        beta: l.beta,
        mode: l.mode,
    };
    let est = laplace_functional(&b, &p, &chi, &q, &spec, cfg.n_samples, cfg.seed)?;
    let m = l.mode - 1;
    let (qm, m0) = (q.amplitudes()[m], chi.coeffs()[m]);
    let limit = laplace_limit(l.beta, m0, qm, p.horizon);
    let model = p.model().expect("viscous model");
    let (mean, var) = terminal_law(&model, b.lambdas()[m], qm, m0, p.horizon);
    let exact = laplace_value(l.beta, mean, var, p.epsilon);
    let mut t = CsvTable::new(&[
        "epsilon",
        "value",
        "std_error",
        "n",
        "exact_finite_eps",
        "limit",
    ]);
    t.push_numbers(&[
        p.epsilon,
        est.value,
        est.std_error,
        est.n_samples as f64,
        exact,
        limit,
    ]);
    let mut r = Report::default();
    r.estimate("value", est.value);
    r.estimate("exact_finite_eps", exact);
    r.estimate("limit", limit);
    r.check(Check::new(
        "value_vs_limit",
        est.value,
        Window::Absolute {
            target: limit,
            tol: 0.05,
        },
        "laplace.csv:value against laplace.csv:limit",
    ));
    r.table("laplace.csv", t);
    Ok(r)
}

fn rate_roundtrip(cfg: &ExperimentConfig) -> Result<Report> {
    let b = basis(cfg)?;
    let noise = noise(cfg, &b)?;
    let k = b.len();
    let q = noise.amplitudes().to_vec();
    let horizon = cfg.model.horizon;
    let mut t = CsvTable::new(&[
        "trial",
        "cells",
        "n_steps",
        "rate",
        "expected",
        "relative_error",
    ]);
    for trial in 0..cfg.trials {
        let key = StreamKey::new(cfg.seed, trial as u32);
        let u = |i: u32| {
            let bits = philox4x32_10(
                [i, 0, u32::MAX, trial as u32],
                [cfg.seed as u32, (cfg.seed >> 32) as u32],
            );
            f64::from(bits[0]) / 4294967296.0
        };
        let cells = 1 + (u(0) * 40.0) as usize;
        let refine = 1 + (u(1) * 4.0) as usize;
        let live: Vec<usize> = (0..k).filter(|&m| q[m] > 0.0).collect();
        let values: Vec<Vec<f64>> = (0..cells)
            .map(|i| {
                (0..k)
                    .map(|m| 3.0 * q[m] * key.normal(m as u32, i as u32, 1))
                    .collect()
            })
            .collect();
        let h = horizon / cells as f64;
        let expected = 0.5
            * h
            * values
                .iter()
                .map(|row| live.iter().map(|&m| (row[m] / q[m]).powi(2)).sum::<f64>())
                .sum::<f64>();
        let ctrl = ControlPath::new(values, horizon, &noise, f64::INFINITY)?;
        let chi = SpectralField::new((0..k).map(|m| q[m] * key.normal(m as u32, 0, 2)).collect())?;
        let path = euler_skeleton(&chi, &ctrl, cells * refine)?;
        let rate = rate_functional(&noise, &path)?.value;
        let rel = if expected > 0.0 {
            (rate - expected).abs() / expected
        } else {
            rate.abs()
        };
        t.push_numbers(&[
            trial as f64,
            cells as f64,
            (cells * refine) as f64,
            rate,
            expected,
            rel,
        ]);
    }
    let mut r = Report::default();
    r.check(Check::new(
        "max_relative_error",
        column_max(&t, "relative_error"),
        Window::AtMost { max: 1e-10 },
        "max of rate_roundtrip.csv:relative_error",
    ));
    r.table("rate_roundtrip.csv", t);
    Ok(r)
}
