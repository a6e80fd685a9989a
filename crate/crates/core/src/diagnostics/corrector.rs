//! Radial boundary-layer corrector `v(r) = u_E(r) eta((1 - r)/delta)`.
//!
//! The azimuthal field `v(r) x^perp/|x|` is divergence-free for any radial
//! profile, and `u_E - v` vanishes at `r = 1` because `eta(0) = 1`.

use crate::basis::EigenBasis;
use crate::error::{check_len, invalid, Error, Result};
use crate::field::SpectralField;
use crate::quadrature::{Quadrature, NODES_PER_PANEL};
use crate::stats::{fit_power_law, SlopeFit};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A radial profile `u(r)` on `[0, 1]` with derivative.
pub trait RadialProfile {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
}

/// `amplitude * r^power`; `power = 1` is solid-body rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub amplitude: f64,
    pub power: f64,
}

impl RadialProfile for PowerProfile {
    fn value(&self, r: f64) -> f64 {
        self.amplitude * r.powf(self.power)
    }

    fn derivative(&self, r: f64) -> f64 {
        if self.power == 0.0 {
            0.0
        } else {
            self.amplitude * self.power * r.powf(self.power - 1.0)
        }
    }
}

/// Spectral field viewed as a radial profile (vanishes at `r = 1`).
#[derive(Debug, Clone)]
pub struct FieldProfile<'a> {
    basis: &'a EigenBasis,
    field: SpectralField,
}

impl<'a> FieldProfile<'a> {
    pub fn new(basis: &'a EigenBasis, field: SpectralField) -> Result<Self> {
        check_len("field", basis.len(), field.len())?;
        Ok(Self { basis, field })
    }
}

impl RadialProfile for FieldProfile<'_> {
    fn value(&self, r: f64) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(self.field.coeffs())
            .map(|(m, c)| c * m.value(r))
            .sum()
    }

    fn derivative(&self, r: f64) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(self.field.coeffs())
            .map(|(m, c)| c * m.derivative(r))
            .sum()
    }
}

/// Cutoff `eta` on `[0, 1]` with `eta(0) = 1`, `eta(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `1 - 3s^2 + 2s^3`.
    #[default]
    Smoothstep,
    /// `(1 + cos(pi s)) / 2`.
    Cosine,
}

impl Cutoff {
    pub fn eta(self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s >= 1.0 {
            return 0.0;
        }
        match self {
            Cutoff::Smoothstep => 1.0 - s * s * (3.0 - 2.0 * s),
            Cutoff::Cosine => 0.5 * (1.0 + (PI * s).cos()),
        }
    }

    pub fn eta_prime(self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Cutoff::Smoothstep => 6.0 * s * (s - 1.0),
            Cutoff::Cosine => -0.5 * PI * (PI * s).sin(),
        }
    }

    /// `int_0^1 eta(s)^2 ds`.
    pub fn square_integral(self) -> f64 {
        match self {
            Cutoff::Smoothstep => 13.0 / 35.0,
            Cutoff::Cosine => 3.0 / 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorSpec {
    pub delta: f64,
    #[serde(default)]
    pub profile: Cutoff,
}

impl CorrectorSpec {
    pub fn new(delta: f64, profile: Cutoff) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(Self { delta, profile })
    }
}

/// Norms of a corrector on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectorNorms {
    pub delta: f64,
    pub l2: f64,
    pub grad_l2: f64,
    pub linf: f64,
    /// `sup (1 - r) |grad v|`.
    pub weighted_grad_linf: f64,
}

pub struct Corrector<'a> {
    profile: &'a dyn RadialProfile,
    spec: CorrectorSpec,
}

/// Panels used for the strip integrals and the sup-norm sampling.
const STRIP_PANELS: usize = 64;

impl Corrector<'_> {
    pub fn spec(&self) -> CorrectorSpec {
        self.spec
    }

    fn s(&self, r: f64) -> f64 {
        (1.0 - r) / self.spec.delta
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= 1.0 - self.spec.delta {
            return 0.0;
        }
        self.profile.value(r) * self.spec.profile.eta(self.s(r))
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= 1.0 - self.spec.delta {
            return 0.0;
        }
        let s = self.s(r);
        let cut = self.spec.profile;
        self.profile.derivative(r) * cut.eta(s)
            - self.profile.value(r) * cut.eta_prime(s) / self.spec.delta
    }

    /// `|grad v|^2 = v'^2 + v^2 / r^2` for the azimuthal field.
    fn grad_sq(&self, r: f64) -> f64 {
        let v = self.value(r);
        let dv = self.derivative(r);
        dv * dv + v * v / (r * r)
    }

    pub fn norms(&self) -> Result<CorrectorNorms> {
        let a = 1.0 - self.spec.delta;
        let quad = Quadrature::composite(a, 1.0, STRIP_PANELS, NODES_PER_PANEL)?;
        let l2 = (2.0 * PI * quad.integrate(|r| self.value(r).powi(2) * r)).sqrt();
        let grad_l2 = (2.0 * PI * quad.integrate(|r| self.grad_sq(r) * r)).sqrt();
        let samples = 16 * STRIP_PANELS;
        let mut linf: f64 = 0.0;
        let mut weighted: f64 = 0.0;
        for i in 0..=samples {
            let r = a + self.spec.delta * i as f64 / samples as f64;
            linf = linf.max(self.value(r).abs());
            weighted = weighted.max((1.0 - r) * self.grad_sq(r).sqrt());
        }
        Ok(CorrectorNorms {
            delta: self.spec.delta,
            l2,
            grad_l2,
            linf,
            weighted_grad_linf: weighted,
        })
    }
}

pub fn corrector_build(profile: &dyn RadialProfile, spec: CorrectorSpec) -> Corrector<'_> {
    Corrector { profile, spec }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorScaling {
    pub rows: Vec<CorrectorNorms>,
    pub l2: SlopeFit,
    pub grad_l2: SlopeFit,
    pub linf: SlopeFit,
}

/// Norms over `deltas` and their log-log exponents.
pub fn corrector_scaling_check(
    profile: &dyn RadialProfile,
    cutoff: Cutoff,
    deltas: &[f64],
) -> Result<CorrectorScaling> {
    if deltas.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} widths given, need at least 3",
            deltas.len()
        )));
    }
    let rows = deltas
        .iter()
        .map(|&d| corrector_build(profile, CorrectorSpec::new(d, cutoff)?).norms())
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&CorrectorNorms) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let l2 = fit_power_law(deltas, &col(|r| r.l2), 3)?;
    let grad_l2 = fit_power_law(deltas, &col(|r| r.grad_l2), 3)?;
    let linf = fit_power_law(deltas, &col(|r| r.linf), 3)?;
    Ok(CorrectorScaling {
        rows,
        l2,
        grad_l2,
        linf,
    })
}
