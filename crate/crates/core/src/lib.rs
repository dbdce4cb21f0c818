//! Planning of quantum key distribution networks: choose a small set of
//! fiber links that still connects every node (optionally surviving any single
//! link failure) while avoiding low key-rate bottlenecks.
//!
//! The hybrid planners in [`planner`] turn each step into a QUBO and hand it
//! to a [`qubo::QuboSolver`]; [`baseline`] anneals edge subsets directly and
//! [`eval`] scores any result.

pub mod baseline;
pub mod cost;
pub mod eval;
pub mod export;
pub mod graph;
pub mod network;
pub mod plan;
pub mod planner;
pub mod qubo;
pub mod rng;

pub use network::{EdgeSet, Network, NetworkBuilder};
pub use plan::PlanSolution;
