//! Everything around the core library that needs an operating system:
//! surface resolution from files and flags, the multi-trial campaign
//! runner, and the on-disk artifact formats (traces, summaries, manifests,
//! plot curves).

pub mod campaign;
pub mod config;
pub mod curves;
pub mod persist;
