//! Deterministic simulator for auction-based packet forwarding in ad-hoc
//! networks, with a catalog of competing node strategies and a tournament
//! harness for fine, TTL and churn sweeps.

pub mod cli;
pub mod config;
pub mod engine;
pub mod model;
pub mod observation;
pub mod predictor;
pub mod seed;
pub mod strategies;
pub mod topology;
pub mod tournament;

pub use engine::{GameConfig, NodeSetup, Simulation, SimulationOutcome};
pub use model::{Money, NodeId};
