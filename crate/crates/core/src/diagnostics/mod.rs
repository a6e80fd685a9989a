//! Pathwise energy identities, boundary-strip dissipation and the radial
//! boundary-layer corrector.

pub mod corrector;
pub mod energy;
pub mod kato;

pub use corrector::{
    corrector_build, corrector_scaling_check, Corrector, CorrectorNorms, CorrectorScaling,
    CorrectorSpec, Cutoff, FieldProfile, PowerProfile, RadialProfile,
};
pub use energy::{
    energy_balance_gap, energy_residual_ns, energy_residual_sg, euler_energy_residual,
    viscous_dissipation, Identity, ResidualSeries, SgNorm,
};
pub use kato::{kato_functional, KatoOperator, KatoSpec};
