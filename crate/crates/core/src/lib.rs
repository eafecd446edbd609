//! Multimodal exophora resolution.
//!
//! Given a semantic map, an instruction like "bring me that red cup", and
//! whatever is known about the speaker's skeleton, score every mapped object
//! with three estimators (language, demonstrative region, pointing), fuse
//! them into a top-5 shortlist, and settle on one object, asking the user at
//! most one clarifying question.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix it to `f64`, which the resolver, evaluation harness and CLI use.

pub mod config;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod geometry;
pub mod map;
pub mod perception;
pub mod query;
pub mod resolver;
pub mod scalar;
pub mod session;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec3 = geometry::Vec3<f64>;
pub type ObjectEntry = map::ObjectEntry<f64>;
pub type SemanticMap = map::SemanticMap<f64>;
pub type ParsedQuery = query::ParsedQuery<f64>;
pub type UserObservation = perception::UserObservation<f64>;
pub type ScoreDistribution = estimators::ScoreDistribution<f64>;
pub type FusedRanking = estimators::FusedRanking<f64>;
pub type RankedObject = estimators::RankedObject<f64>;
pub type DemonstrativeModel = estimators::DemonstrativeModel<f64>;
pub type PointingModel = estimators::PointingModel<f64>;
pub type Estimates = estimators::Estimates<f64>;

pub type SemanticMapF32 = map::SemanticMap<f32>;
pub type ScoreDistributionF32 = estimators::ScoreDistribution<f32>;
