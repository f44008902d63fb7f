//! Bottleneck encoders over discrete semantic environments, a graded
//! quasi-convexity measure of word meanings, and the experiment pipelines
//! connecting the two.
//!
//! The numeric core is generic over the scalar type ([`scalar::Scalar`],
//! implemented by `f32` and `f64`); the concrete `f64` aliases below are
//! what the pipelines and the command line use.

pub mod color;
pub mod convexity;
pub mod env;
pub mod error;
pub mod ib;
pub mod info;
pub mod perturb;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the main domain types.
pub type Environment64 = env::Environment<f64>;
pub type Embedding64 = env::Embedding<f64>;
pub type Encoder64 = info::Encoder<f64>;
pub type Marginals64 = info::Marginals<f64>;
pub type MetricsPoint64 = info::MetricsPoint<f64>;
pub type FrontierPoint64 = ib::FrontierPoint<f64>;
pub type AnnealSchedule64 = ib::AnnealSchedule<f64>;
pub type ConvexityScore64 = convexity::ConvexityScore<f64>;
