//! Hybrid planners: the per-root spanning QUBO loop and the circle-redundancy
//! loop built on top of its output.

mod nn;
mod redundancy;

pub use nn::{
    build_nn_qubo, decode_nn, filter_build, hop_order, run_hqa, run_hqa_traced, HqaConfig, NnQubo,
    NnReport,
};
pub use redundancy::{
    build_redundancy_qubo, bridge_workaround, decode_redundancy, find_redundancies, run_redundancy,
    BridgeFilter, Redundancy, RedundancyConfig, RedundancyDecode, RedundancyQubo,
};

use thiserror::Error;

use crate::cost::CostError;
use crate::eval::EvalError;
use crate::network::NetworkError;
use crate::qubo::{QuboError, SolverError};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("node {0} is not reachable by any listed path")]
    Unreachable(String),
    #[error("iteration {iteration} (node {node}): {source}")]
    Solver {
        iteration: usize,
        node: String,
        #[source]
        source: SolverError,
    },
    #[error("edge frequencies do not span the network")]
    NotSpanning,
    #[error("input edge set does not connect every node")]
    InputNotSpanning,
    #[error("no redundancy candidates for node {0}")]
    NoCandidates(String),
    #[error("no redundancy exists: bridges {0:?} lie on no cycle of the network")]
    NoRedundancy(Vec<(String, String)>),
    #[error("bridges remain after {rounds} rounds: {bridges:?}")]
    BridgesRemain {
        rounds: usize,
        bridges: Vec<(String, String)>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}
