//! High-confidence bounds on password guessing curves.
//!
//! Given an empirical sample of passwords, the crate bounds λ_G, the fraction of
//! accounts an optimal attacker cracks with `G` guesses. Lower bounds come from
//! split-sample estimates, a prior-free frequency argument and linear programs over
//! a probability mesh; upper bounds from the empirical top-`G` mass and the LPs.

// `!(x > 0.0)` style checks are deliberate: they reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod corpus;
pub mod meshlp;
pub mod oracle;
pub mod scalar;
pub mod schedule;

pub use scalar::Scalar;

/// Bound points in double precision.
pub type BoundPointF64 = bounds::BoundPoint<f64>;
/// Bound points in single precision.
pub type BoundPointF32 = bounds::BoundPoint<f32>;
pub type GuessingCurveF64 = bounds::GuessingCurve<f64>;
pub type GuessingCurveF32 = bounds::GuessingCurve<f32>;
pub type MeshF64 = meshlp::Mesh<f64>;
pub type MeshF32 = meshlp::Mesh<f32>;
pub type LpParamsF64 = meshlp::LpParams<f64>;
pub type LpParamsF32 = meshlp::LpParams<f32>;
pub type KnownDistributionF64 = oracle::KnownDistribution<f64>;
pub type KnownDistributionF32 = oracle::KnownDistribution<f32>;
