//! Simulation of photon generation from vacuum in a cavity coupled to an ancilla qubit, which
//! in turn couples to a frequency-modulated qubit that never sees the field directly.
//!
//! All frequencies are in units of the cavity frequency ν and all times in units of 1/ν.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod operators;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{AtomicBasis, Coupling, SystemParams};
