//! Partitioning-attack simulator and census analytics for Bitcoin-like
//! peer-to-peer networks.
//!
//! * [`topology`]: AS and organization concentration, minimum covers, hash-rate attribution
//!   and a calibrated synthetic topology generator.
//! * [`ingest`]: census snapshots, longest-prefix AS resolution and snapshot series.
//! * [`sim`]: discrete-event mining, gossip and churn engine.
//! * [`adversary`]: spatial, temporal and logical attack scenarios and their economics.
//! * [`blockaware`]: elapsed-time lag detection.
//! * [`analytics`]: version census, lag series and report emission.
//!
//! Metric code is generic over [`Scalar`] (`f32`, `f64`); economics works in any
//! `num_traits::Num` type, including exact rationals. The aliases below fix
//! the scalar to [`Real`].

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod analytics;
pub mod blockaware;
pub mod error;
pub mod ingest;
pub mod jsonfmt;
pub mod presets;
pub mod scalar;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;

pub type CoverResult = topology::CoverResult<topology::Asn, Real>;
pub type OrgCoverResult = topology::CoverResult<String, Real>;
pub type CdfSeries = topology::CdfSeries<Real>;
pub type MiningPool = topology::MiningPool<Real>;
pub type VersionCensus = analytics::VersionCensus<Real>;
pub type LagTimeseries = analytics::LagTimeseries<Real>;
pub type LagHistogram = sim::LagHistogram<Real>;
pub type EconomicParams = adversary::EconomicParams<Real>;
pub type ValueAtRisk = adversary::ValueAtRisk<Real>;
