//! Experiment configuration. Every section rejects unknown keys; only
//! `experiment` and `seed` are mandatory.

use ldplab_core::diagnostics::Cutoff;
use ldplab_core::ldp::Method;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BasisCheck,
    InviscidSweep,
    ForcingRate,
    SgForcingRate,
    IdentityRefinement,
    KatoSweep,
    CorrectorSweep,
    RareEvent,
    Laplace,
    RateRoundtrip,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BasisCheck => "basis_check",
            Experiment::InviscidSweep => "inviscid_sweep",
            Experiment::ForcingRate => "forcing_rate",
            Experiment::SgForcingRate => "sg_forcing_rate",
            Experiment::IdentityRefinement => "identity_refinement",
            Experiment::KatoSweep => "kato_sweep",
            Experiment::CorrectorSweep => "corrector_sweep",
            Experiment::RareEvent => "rare_event",
            Experiment::Laplace => "laplace",
            Experiment::RateRoundtrip => "rate_roundtrip",
        }
    }

    fn default_kind(self) -> Kind {
        match self {
            Experiment::SgForcingRate => Kind::SecondGrade,
            _ => Kind::NavierStokes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    NavierStokes,
    SecondGrade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Defaults to second grade for `sg_forcing_rate`, Navier–Stokes otherwise.
    pub kind: Option<Kind>,
    /// Intensity for single-`eps` experiments.
    pub epsilon: f64,
    /// `nu / eps` for the second-grade model.
    pub nu_ratio: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: None,
            epsilon: 0.1,
            nu_ratio: 0.5,
            horizon: 1.0,
            n_steps: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub k: usize,
    pub gamma: f64,
    pub delta_reg: f64,
    /// Explicit amplitudes `q_k`; canonical decay when absent.
    pub amplitudes: Option<Vec<f64>>,
    /// Multiplies every amplitude; `0` switches the noise off.
    pub scale: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            k: 32,
            gamma: 2.0,
            delta_reg: 0.01,
            amplitudes: None,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Zero,
    /// 1-based mode index.
    Unit(usize),
    Coeffs(Vec<f64>),
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Unit(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    Zero,
    /// Constant forcing `f = q`.
    NoiseAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventChoice {
    SingleMode,
    TerminalBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RareEventSection {
    pub event: EventChoice,
    pub rho: f64,
    pub mode: usize,
    pub method: Method,
}

impl Default for RareEventSection {
    fn default() -> Self {
        Self {
            event: EventChoice::SingleMode,
            rho: 0.5,
            mode: 1,
            method: Method::tilted(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaplaceSection {
    pub beta: f64,
    pub mode: usize,
}

impl Default for LaplaceSection {
    fn default() -> Self {
        Self { beta: 1.0, mode: 1 }
    }
}

/// Radial profile `amplitude * r^power` whose boundary value the corrector
/// cancels; the default is solid-body rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorSection {
    pub amplitude: f64,
    pub power: f64,
    pub cutoff: Cutoff,
}

impl Default for CorrectorSection {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            power: 1.0,
            cutoff: Cutoff::Smoothstep,
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}

fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}

fn default_cs() -> Vec<f64> {
    vec![0.25, 1.0, 4.0]
}

fn default_n_steps_list() -> Vec<usize> {
    vec![16, 32, 64, 128, 256]
}

fn default_n_samples() -> usize {
    10_000
}

fn default_theta() -> f64 {
    0.05
}

fn default_trials() -> usize {
    50
}

fn default_annulus_panels() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub initial: Initial,
    /// Defaults to `noise_aligned` for the forcing experiments, `zero`
    /// otherwise.
    #[serde(default)]
    pub control: Option<ControlKind>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_cs")]
    pub cs: Vec<f64>,
    #[serde(default = "default_n_steps_list")]
    pub n_steps_list: Vec<usize>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_annulus_panels")]
    pub annulus_panels: usize,
    #[serde(default)]
    pub rare_event: RareEventSection,
    #[serde(default)]
    pub laplace: LaplaceSection,
    #[serde(default)]
    pub corrector: CorrectorSection,
    /// Basis saved by `EigenBasis::save`, used instead of building one.
    #[serde(default)]
    pub basis_file: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kind(&self) -> Kind {
        self.model.kind.unwrap_or(self.experiment.default_kind())
    }

    pub fn control_kind(&self) -> ControlKind {
        self.control.unwrap_or(match self.experiment {
            Experiment::ForcingRate | Experiment::SgForcingRate => ControlKind::NoiseAligned,
            _ => ControlKind::Zero,
        })
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use Experiment::*;
        let m = &self.model;
        if !(m.epsilon > 0.0 && m.epsilon.is_finite()) {
            return Err(bad(format!("model.epsilon must be > 0, got {}", m.epsilon)));
        }
        if !(m.nu_ratio >= 0.0 && m.nu_ratio.is_finite()) {
            return Err(bad(format!(
                "model.nu_ratio must be >= 0, got {}",
                m.nu_ratio
            )));
        }
        if !(m.horizon > 0.0 && m.horizon.is_finite()) {
            return Err(bad(format!("model.horizon must be > 0, got {}", m.horizon)));
        }
        if m.n_steps == 0 {
            return Err(bad("model.n_steps must be >= 1"));
        }
        let n = &self.noise;
        if n.k == 0 {
            return Err(bad("noise.k must be >= 1"));
        }
        if !(n.scale >= 0.0 && n.scale.is_finite()) {
            return Err(bad(format!("noise.scale must be >= 0, got {}", n.scale)));
        }
        if let Some(q) = &n.amplitudes {
            if q.len() != n.k {
                return Err(bad(format!(
                    "noise.amplitudes has {} entries, k = {}",
                    q.len(),
                    n.k
                )));
            }
        }
        match &self.initial {
            Initial::Unit(j) if *j == 0 || *j > n.k => {
                return Err(bad(format!("initial unit mode {j} outside 1..={}", n.k)))
            }
            Initial::Coeffs(c) if c.len() != n.k => {
                return Err(bad(format!(
                    "initial has {} coefficients, k = {}",
                    c.len(),
                    n.k
                )))
            }
            _ => {}
        }
        let expected_kind = match self.experiment {
            SgForcingRate => Some(Kind::SecondGrade),
            ForcingRate | KatoSweep => Some(Kind::NavierStokes),
            _ => None,
        };
        if let (Some(want), Some(got)) = (expected_kind, m.kind) {
            if want != got {
                return Err(bad(format!(
                    "{} requires model.kind {:?}, got {:?}",
                    self.experiment.name(),
                    want,
                    got
                )));
            }
        }
        let sweeps_eps = matches!(
            self.experiment,
            InviscidSweep | ForcingRate | SgForcingRate | KatoSweep | RareEvent
        );
        if sweeps_eps {
            check_sweep("epsilons", &self.epsilons)?;
        }
        if self.experiment == CorrectorSweep {
            check_sweep("deltas", &self.deltas)?;
            if self.deltas.iter().any(|d| *d >= 1.0) {
                return Err(bad("deltas must lie in (0, 1)"));
            }
        }
        if self.experiment == KatoSweep {
            check_sweep("cs", &self.cs)?;
            if self.annulus_panels < 16 {
                return Err(bad("annulus_panels must be >= 16"));
            }
        }
        if self.experiment == IdentityRefinement {
            if self.n_steps_list.len() < 3 {
                return Err(bad("n_steps_list needs at least 3 entries"));
            }
            if self.n_steps_list.contains(&0) {
                return Err(bad("n_steps_list entries must be >= 1"));
            }
        }
        if self.experiment == ForcingRate || self.experiment == SgForcingRate {
            if !(self.theta > 0.0 && self.theta < 0.5) {
                return Err(bad(format!(
                    "theta must lie in (0, 1/2), got {}",
                    self.theta
                )));
            }
            if self.control_kind() != ControlKind::NoiseAligned || n.scale == 0.0 {
                return Err(bad(
                    "forcing experiments need a non-zero noise-aligned control",
                ));
            }
        }
        if matches!(
            self.experiment,
            InviscidSweep | IdentityRefinement | KatoSweep | Laplace
        ) && self.n_samples == 0
        {
            return Err(bad("n_samples must be >= 1"));
        }
        if self.experiment == RareEvent {
            if self.n_samples < ldplab_core::ldp::estimate::MIN_SAMPLES {
                return Err(bad(format!(
                    "rare_event needs n_samples >= {}",
                    ldplab_core::ldp::estimate::MIN_SAMPLES
                )));
            }
            let r = &self.rare_event;
            if !(r.rho > 0.0) {
                return Err(bad("rare_event.rho must be > 0"));
            }
            if r.mode == 0 || r.mode > n.k {
                return Err(bad(format!(
                    "rare_event.mode {} outside 1..={}",
                    r.mode, n.k
                )));
            }
            if n.scale == 0.0 {
                return Err(bad("rare_event needs non-zero noise"));
            }
            if self.control_kind() != ControlKind::Zero {
                return Err(bad("rare_event is defined for the unforced system"));
            }
        }
        if self.experiment == Laplace {
            let l = &self.laplace;
            if !(l.beta >= 0.0) || l.mode == 0 || l.mode > n.k {
                return Err(bad("laplace needs beta >= 0 and mode in 1..=k"));
            }
        }
        if self.experiment == CorrectorSweep {
            let c = &self.corrector;
            if !(c.amplitude.is_finite() && c.amplitude != 0.0 && c.power.is_finite()) {
                return Err(bad("corrector profile needs a finite non-zero amplitude"));
            }
        }
        if self.experiment == RateRoundtrip && self.trials == 0 {
            return Err(bad("trials must be >= 1"));
        }
        if let Some(p) = &self.basis_file {
            if !p.is_file() {
                return Err(bad(format!("basis_file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

fn check_sweep(name: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.len() < 3 {
        return Err(bad(format!(
            "{name} needs at least 3 entries, got {}",
            xs.len()
        )));
    }
    if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(bad(format!("{name} entries must be positive and finite")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::parse(r#"{"experiment":"inviscid_sweep","seed":3}"#).unwrap();
        assert_eq!(c.noise.k, 32);
        assert_eq!(c.epsilons, vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(c.initial, Initial::Unit(1));
        assert_eq!(c.kind(), Kind::NavierStokes);
        assert_eq!(c.control_kind(), ControlKind::Zero);
    }

    #[test]
    fn missing_seed_is_rejected() {
        assert!(ExperimentConfig::parse(r#"{"experiment":"basis_check"}"#).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for text in [
            r#"{"experiment":"basis_check","seed":1,"colour":2}"#,
            r#"{"experiment":"basis_check","seed":1,"model":{"viscosity":2}}"#,
            r#"{"experiment":"basis_check","seed":1,"noise":{"kk":2}}"#,
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn short_sweeps_are_rejected() {
        let t = r#"{"experiment":"kato_sweep","seed":1,"epsilons":[0.1,0.05]}"#;
        assert!(ExperimentConfig::parse(t).is_err());
        let t = r#"{"experiment":"corrector_sweep","seed":1,"deltas":[0.1,0.05,2.0]}"#;
        assert!(ExperimentConfig::parse(t).is_err());
    }

    #[test]
    fn model_kind_must_fit_the_experiment() {
        let t = r#"{"experiment":"sg_forcing_rate","seed":1,"model":{"kind":"navier_stokes"}}"#;
        assert!(ExperimentConfig::parse(t).is_err());
        let t = r#"{"experiment":"sg_forcing_rate","seed":1}"#;
        assert_eq!(
            ExperimentConfig::parse(t).unwrap().kind(),
            Kind::SecondGrade
        );
    }

    #[test]
    fn missing_basis_file_is_rejected() {
        let t = r#"{"experiment":"basis_check","seed":1,"basis_file":"/nonexistent/basis.json"}"#;
        assert!(ExperimentConfig::parse(t).is_err());
    }

    #[test]
    fn canonical_json_round_trips() {
        let c = ExperimentConfig::parse(
            r#"{"experiment":"rare_event","seed":9,"noise":{"k":1,"amplitudes":[1.0]},
                "rare_event":{"method":{"method":"plain"}},"epsilons":[0.04,0.02,0.01,0.005]}"#,
        )
        .unwrap();
        assert_eq!(ExperimentConfig::parse(&c.canonical_json()).unwrap(), c);
    }
}
