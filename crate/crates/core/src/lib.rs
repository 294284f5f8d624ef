//! Scale-free synchronization of multi-agent systems with input saturation.
//!
//! Agents `ẋ = Ax + Bσ(u)`, `y = Cx` track an exosystem `ẋ_r = Ax_r` over a
//! directed graph. Protocols P1 to P6 cover neutrally stable, double
//! integrator and mixed-case agents under full-state and partial-state
//! coupling. The runnable programs in `examples/` walk through each
//! capability.

pub mod agent;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod gains;
pub mod graph;
pub mod linalg;
pub mod presets;
pub mod protocol;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
