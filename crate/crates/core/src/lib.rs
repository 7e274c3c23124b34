//! Simulation and verification toolkit for hypergraph recurrent networks.

pub mod bench;
pub mod classical;
pub mod contextuality;
pub mod dense;
pub mod engine;
pub mod error;
pub mod hsmt;
pub mod hypergraph;
pub mod io;
pub mod lie;
pub mod phase;
pub mod qumode;
pub mod rng;
pub mod statevector;
pub mod types;

pub use error::{Error, Result};
