//! Core algorithms for cost-aware active learning on gridded surfaces.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that does not
//! touch the filesystem or threads: exact Gaussian-process regression with
//! gradient-trained hyperparameters, the query policies that trade predictive
//! variance against travel cost, synthetic and elevation-map surfaces, the
//! exploration loop itself, and the convergence metrics used to score a run.
//! File IO, parallel campaign execution, and the command-line front end live
//! in the companion `gppf-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod explorer;
pub mod gp;
pub mod metrics;
pub mod point;
pub mod policy;
pub mod stream;
pub mod surface;

pub use point::Point2;
