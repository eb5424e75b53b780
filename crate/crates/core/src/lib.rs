//! Birth-death processes with total catastrophes.
//!
//! A catastrophe resets the process to its floor state `r` at rate `ξ` from every state
//! above `r`. The crate computes transient laws, first-visit and effective-catastrophe
//! statistics and stationary distributions, each by more than one route so that the
//! routes can be checked against one another.
//!
//! The numerical engines are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar. Monte Carlo works in `f64`.

pub mod analysis;
pub mod closedform;
pub mod error;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod ode;
pub mod quadrature;
pub mod resolvent;
pub mod scalar;
pub mod specfun;
pub mod transient;
pub mod verify;

pub use error::{EngineError, Error, ModelError, SpecFunError};
pub use scalar::Real;

pub type ProcessSpecF64 = model::ProcessSpec<f64>;
pub type ProcessSpecF32 = model::ProcessSpec<f32>;
pub type TimeVaryingSpecF64 = model::TimeVaryingSpec<f64>;
pub type TimeVaryingSpecF32 = model::TimeVaryingSpec<f32>;
pub type TruncationWindowF64 = model::TruncationWindow<f64>;
pub type TruncationWindowF32 = model::TruncationWindow<f32>;
pub type DistributionVectorF64 = transient::DistributionVector<f64>;
pub type DistributionVectorF32 = transient::DistributionVector<f32>;
pub type ResolventSolutionF64 = resolvent::ResolventSolution<f64>;
pub type ResolventSolutionF32 = resolvent::ResolventSolution<f32>;
pub type StationaryDistributionF64 = analysis::StationaryDistribution<f64>;
pub type StationaryDistributionF32 = analysis::StationaryDistribution<f32>;
