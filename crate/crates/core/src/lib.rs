//! Simulation and certificate checking for AB/Push-Pull gradient tracking
//! over time-varying directed graphs.

pub mod diagnostics;
pub mod engine;
pub mod graph;
pub mod harness;
pub mod mixing;
pub mod objectives;
pub mod rng;
pub mod stack;

pub use stack::AgentStack;
