//! Core numerics for auditing membership-inference leakage of classifiers.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std` (an allocator is required). File formats, the command line
//! and the parallel CPM runner live in the companion `cpm-audit` crate.
//!
//! Modules:
//! - [`predictions`]: audit data model and the selection/evaluation split.
//! - [`scores`]: MSP, ENT, CE, ME, their convexified surrogates, RelaxLoss
//!   and Mixup scores.
//! - [`threshold`]: threshold attacks and empirical advantage.
//! - [`polytope`], [`adam`], [`cpm`]: the convex polytope machine.
//! - [`oracle`]: exact discrepancy over convex sets and halfspaces on tiny
//!   point sets.
//! - [`lab`]: synthetic data and tiny MLP audit targets.
//! - [`report`]: aggregation of attack results.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adam;
pub mod cpm;
mod error;
pub mod lab;
pub mod math;
pub mod oracle;
pub mod polytope;
pub mod predictions;
pub mod report;
pub mod rng;
pub mod scores;
mod serde_ext;
pub mod threshold;

pub use error::{Error, Result};
pub use predictions::{AuditDataset, FeatureVector, PredictionRecord, Split};
