//! Rate functionals, terminal-event rate minima and Monte Carlo estimators
//! of rare-event probabilities and Laplace functionals.

pub mod estimate;
pub mod gaussian;
pub mod laplace;
pub mod rate;
pub mod study;

pub use estimate::{
    estimate_rare_event, tilt_weight_mean, EstimatorResult, EventKind, Method, RareEventSpec,
    DEFAULT_TILT_MARGIN,
};
pub use laplace::{laplace_functional, laplace_limit, LaplaceEstimate, LaplaceSpec};
pub use rate::{
    optimal_terminal_control, rate_functional, rate_of_states, terminal_ball_rate, RateValue,
};
pub use study::{ldp_convergence_study, richardson, LdpStudy, StudyRow};
