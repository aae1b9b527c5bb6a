//! Classical and modified ruin probabilities in the Cramér–Lundberg model with
//! mixed Poisson claim arrivals.
//!
//! * [`distributions`]: claim-size laws F and intensity mixing laws G.
//! * [`rules`]: boundary weights w(y) defining modified ruin.
//! * [`ladder`]: exact ladder-height sampling and plain Monte Carlo estimators.
//! * [`asymptotics`]: adjustment coefficients, Cramér constants, the limiting
//!   overshoot law and the asymptotic predictions.
//! * [`rare_event`]: exponentially tilted importance sampling.
//! * [`harness`]: configuration, orchestration and reports for the CLI.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod ladder;
pub mod quadrature;
pub mod rare_event;
pub mod rng;
pub mod rules;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
