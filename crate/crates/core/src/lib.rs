//! Limited-scale hopsets, near-additive emulators, approximate shortest paths
//! and distance sketches, executed on a simulated MPC engine with explicit
//! memory and I/O caps.

pub mod bellman_ford;
pub mod cli;
pub mod emulator;
pub mod error;
pub mod exact;
pub mod framework;
pub mod graph;
pub mod hopset;
pub mod mpc;
pub mod rng;
pub mod shortest_paths;
pub mod sketch;

pub use error::{Error, Result};
