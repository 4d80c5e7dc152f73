//! Deterministic discrete-event simulation of ticket-spinlock contention on
//! multicore machines, plus the analyses that go with it: an exact
//! mean-value-analysis baseline, a model-driven search for the best core-set
//! size, co-run contention metrics, and per-function scalability values.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `lockthrash` companion crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod config;
pub mod engine;
pub mod error;
pub mod event;
pub mod metrics;
pub mod mva;
pub mod policy;
pub mod scalval;
pub mod ssc;

mod rng;

pub use config::{CriticalSectionSpec, PlatformConfig, SectionSpec, Topology, WorkloadConfig};
pub use engine::{run, run_logged, EventCounts, RunParams, SimResult};
pub use error::{ConfigError, Error, InputError};
pub use event::{Event, EventKind};
pub use policy::LockPolicy;

/// Simulated time, in abstract cycles.
pub type Cycles = u64;
