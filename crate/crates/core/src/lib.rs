//! Simulator and optimizer for adaptive multicarrier quadrature division
//! (AMQD) over parallel Gaussian sub-channels.
//!
//! Gaussian inputs are spread over Fourier subcarriers, sent through noisy
//! sub-channels under an entangling-cloner attack, allocated modulation
//! variance by water-filling, and scored with closed-form rate, excess-noise
//! and key-rate figures.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod channel;
pub mod cli;
pub mod cvqft;
pub mod error;
pub mod gaussian;
pub mod rates;
pub mod rng;
pub mod scenario;
pub mod stats;

pub use allocation::{constant_allocation, exact_waterfill, AllocationPlan, PlanKind};
pub use channel::{AmqdBlock, CrosstalkMatrix, EveModel, SubChannelSet};
pub use error::{AmqdError, Result};
pub use gaussian::{ComplexGaussian, ComplexGaussianVector, GaussianSignal, QuadratureVariance};
pub use rates::{HolevoLedger, KeyRateVariant, RateReport, SecurityVerdict};
pub use scenario::Scenario;
