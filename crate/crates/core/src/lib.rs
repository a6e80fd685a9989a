//! Spectral simulation and large-deviation diagnostics for circularly
//! symmetric stochastic flows on the unit disk.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod bessel;
pub mod control;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod io;
pub mod ldp;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod semigroup;
pub mod stats;
pub mod sweep;
pub mod trajectory;

pub use basis::{EigenBasis, EigenMode};
pub use control::ControlPath;
pub use error::{Error, Result};
pub use field::SpectralField;
pub use noise::NoiseSpec;
pub use rng::StreamKey;
pub use sde::{
    euler_skeleton, mild_forcing, simulate, simulate_radial_ns, simulate_radial_sg, tilted_simulate,
};
pub use semigroup::{semigroup_apply, Model};
pub use trajectory::{ModelKind, ModelParams, Trajectory};
