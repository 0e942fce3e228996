//! Constant-sum extension of the Osipov–Lanchester attrition model.
//!
//! The two populations `R` and `B` interact through coefficients `alpha` and
//! `beta`; a balancing rate keeps `N = R + B` fixed, which closes the dynamics
//! on the share `x = R / N` and turns the ratio `y = R / B` into the autonomous
//! Riccati equation `y' = alpha * y^2 - beta`.
//!
//! Modules:
//!
//! * [`model`]: coefficient and state types, right-hand sides.
//! * [`closed_form`]: exact ratio solutions for every sign configuration.
//! * [`integrator`]: RK4 / Dormand–Prince integration with event detection.
//! * [`classifier`]: parameter-level regime classification.
//! * [`corridor`]: invariance under time-varying coefficients, buffer feedback,
//!   corridor admissibility and the deviation envelope.
//! * [`premium`]: matrix exponential of the classical generator and growth rates.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod classifier;
pub mod closed_form;
pub mod corridor;
pub mod error;
pub mod integrator;
pub mod model;
pub mod premium;
pub mod scalar;

pub use error::{Error, Result};
pub use model::Face;
pub use scalar::Scalar;

pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type AbsoluteState64 = model::AbsoluteState<f64>;
pub type ShareState64 = model::ShareState<f64>;
pub type RatioState64 = model::RatioState<f64>;
pub type ClosedFormSolution64 = closed_form::ClosedFormSolution<f64>;
pub type ClosedFormSolution32 = closed_form::ClosedFormSolution<f32>;
pub type IntegratorConfig64 = integrator::IntegratorConfig<f64>;
pub type Trajectory64 = integrator::Trajectory<f64>;
pub type RegimeReport64 = classifier::RegimeReport<f64>;
pub type CorridorSpec64 = corridor::CorridorSpec<f64>;
pub type PerturbationSchedule64 = corridor::PerturbationSchedule<f64>;
pub type BufferLaw64 = corridor::BufferLaw<f64>;
pub type Mat2x64 = premium::Mat2<f64>;
pub type Mat2x32 = premium::Mat2<f32>;
