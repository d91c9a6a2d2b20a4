//! Outage probability and transmission capacity of finite DS-CDMA ad hoc
//! networks with exclusion zones and CSMA guard zones.
//!
//! - [`geometry`]: uniform-clustering placement and sequential CSMA thinning.
//! - [`channel`]: path loss, shadowing, spreading gain, normalized powers.
//! - [`outage`]: exact conditional outage probability under Nakagami fading.
//! - [`oracle`]: fading-level simulation used to check the closed form.
//! - [`montecarlo`]: spatial averaging, transmission capacity and sweeps.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the precision to `f64`, which is what the CLI uses.

// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod oracle;
pub mod outage;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use channel::ShadowingScale;
pub use geometry::TxBearing;
pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type NetworkScenario = geometry::NetworkScenario<f64>;
pub type NetworkRealization = geometry::NetworkRealization<f64>;
pub type ChannelParams = channel::ChannelParams<f64>;
pub type ChipMode = channel::ChipMode<f64>;
pub type NormalizedPowers = channel::NormalizedPowers<f64>;
pub type InterfererPower = channel::InterfererPower<f64>;
pub type OutageKernel = outage::OutageKernel<f64>;
pub type OracleResult = oracle::OracleResult<f64>;
pub type ExperimentSpec = montecarlo::ExperimentSpec<f64>;
pub type SpatialAverage = montecarlo::SpatialAverage<f64>;
pub type Estimate = montecarlo::Estimate<f64>;
pub type SweepTable = montecarlo::SweepTable<f64>;

/// Single-precision aliases.
pub mod single {
    pub type Point = crate::geometry::Point<f32>;
    pub type NetworkScenario = crate::geometry::NetworkScenario<f32>;
    pub type NetworkRealization = crate::geometry::NetworkRealization<f32>;
    pub type ChannelParams = crate::channel::ChannelParams<f32>;
    pub type NormalizedPowers = crate::channel::NormalizedPowers<f32>;
    pub type ExperimentSpec = crate::montecarlo::ExperimentSpec<f32>;
    pub type SpatialAverage = crate::montecarlo::SpatialAverage<f32>;
}
