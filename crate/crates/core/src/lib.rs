//! Outage probability and delay outage rate of a RIS-aided link to a planar
//! fluid-antenna receiver.
//!
//! The analytical route models the best-port gain with a Gaussian copula
//! over spatially correlated ports ([`channel::fas_gain_cdf`]); the
//! [`montecarlo`] module simulates the same link directly.

// Published coefficients are kept digit for digit; `!(x > 0)` guards reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod copula;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod montecarlo;
pub mod special;
pub mod sweep;
pub mod units;

pub use channel::{clt_params, CascadeGainDistribution, SystemConfig};
pub use copula::{Estimate, RqmcOptions};
pub use error::{Error, Result};
pub use geometry::{PortGrid, Regularization, SpatialCorrelation};
pub use metrics::{SweepRecord, TasBaseline};
pub use montecarlo::{McEstimate, McRun};
pub use sweep::{Axis, SweepSpec};
