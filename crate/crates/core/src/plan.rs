//! Planner output shared by every method, and its JSON file form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{edge_improvement, min_key_rate, EvalError};
use crate::graph::is_connected;
use crate::network::{EdgeSet, Network, NetworkError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent of network edges left out, two decimals.
    pub edge_improvement: f64,
    /// Lowest key rate among the chosen edges, kbit/s.
    pub min_key_rate: f64,
    pub edge_count: usize,
}

impl Metrics {
    pub fn compute(net: &Network, edges: &EdgeSet) -> Result<Metrics, EvalError> {
        Ok(Metrics {
            edge_improvement: edge_improvement(net, edges)?,
            min_key_rate: min_key_rate(net, edges)?,
            edge_count: edges.len(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCount {
    pub u: String,
    pub v: String,
    pub count: u32,
}

/// One root iteration of the spanning planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnIteration {
    pub node: String,
    pub variables: usize,
    pub energy: f64,
    pub violations: usize,
    pub selected_paths: Vec<Vec<String>>,
}

/// One node visit of the redundancy planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedundancyIteration {
    pub round: usize,
    pub node: String,
    pub candidates: usize,
    pub variables: usize,
    pub energy: f64,
    pub violations: usize,
    /// Closed walk `node -> target -> node`, empty when nothing was chosen.
    pub cycle: Vec<String>,
    pub added_edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Provenance {
    Hqa {
        start: String,
        max_len: usize,
        solver: String,
        seed: u64,
        iterations: Vec<NnIteration>,
        edge_frequency: Vec<EdgeCount>,
    },
    Redundancy {
        max_len: usize,
        solver: String,
        seed: u64,
        rounds: usize,
        input_edges: Vec<(String, String)>,
        iterations: Vec<RedundancyIteration>,
    },
    SimulatedAnnealing {
        seed: u64,
        redundancy_mode: bool,
        restarts: usize,
        best_restart: usize,
        best_energy: f64,
        restart_energies: Vec<f64>,
    },
    Heuristic {
        start: String,
        mst_edges: Vec<(String, String)>,
        closing_edges: Vec<(String, String)>,
    },
}

impl Provenance {
    pub fn method(&self) -> &'static str {
        match self {
            Provenance::Hqa { .. } => "hqa",
            Provenance::Redundancy { .. } => "redundancy",
            Provenance::SimulatedAnnealing { .. } => "simulated-annealing",
            Provenance::Heuristic { .. } => "heuristic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanSolution {
    pub edges: EdgeSet,
    pub metrics: Metrics,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("malformed solution file: {0}")]
    Parse(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("solution does not connect all nodes")]
    NotSpanning,
    #[error("stored metrics {stored:?} differ from recomputed {computed:?}")]
    MetricsMismatch { stored: Metrics, computed: Metrics },
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    edges: Vec<(String, String)>,
    metrics: Metrics,
    provenance: Provenance,
}

impl PlanSolution {
    pub fn new(net: &Network, edges: EdgeSet, provenance: Provenance) -> Result<Self, EvalError> {
        Ok(PlanSolution {
            metrics: Metrics::compute(net, &edges)?,
            edges,
            provenance,
        })
    }

    pub fn to_json(&self, net: &Network) -> String {
        let file = SolutionFile {
            edges: self.edges.id_pairs(net),
            metrics: self.metrics.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&file).expect("solution serialization")
    }

    /// Parses and re-validates: edges exist, connect every node, and the
    /// stored metrics match recomputation.
    pub fn from_json(net: &Network, text: &str) -> Result<Self, SolutionFileError> {
        let file: SolutionFile =
            serde_json::from_str(text).map_err(|e| SolutionFileError::Parse(e.to_string()))?;
        let edges = EdgeSet::from_pairs(net, &file.edges)?;
        let sol = PlanSolution {
            edges,
            metrics: file.metrics,
            provenance: file.provenance,
        };
        sol.validate(net)?;
        Ok(sol)
    }

    pub fn validate(&self, net: &Network) -> Result<(), SolutionFileError> {
        if !is_connected(net, &self.edges) {
            return Err(SolutionFileError::NotSpanning);
        }
        let computed = Metrics::compute(net, &self.edges)?;
        if computed != self.metrics {
            return Err(SolutionFileError::MetricsMismatch {
                stored: self.metrics.clone(),
                computed,
            });
        }
        Ok(())
    }
}
