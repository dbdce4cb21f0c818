//! Solution metrics, traffic routing loads, single-failure sweeps and the
//! MST-plus-circles heuristic.
//!
//! Demand between each unordered node pair is routed along the hop-shortest
//! path inside the solution, ties broken by the lexicographically smallest
//! node sequence. A load is the routed demand over the edge's key rate, in
//! percent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{find_bridges, is_two_edge_connected, minimum_spanning_tree, MstWeight, SubgraphAdjacency};
use crate::network::{EdgeSet, Network, NetworkError};
use crate::plan::{PlanSolution, Provenance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("network has no edges")]
    EmptyNetwork,
    #[error("solution has no edges")]
    EmptySolution,
    #[error("edge {0} is not part of the network")]
    ForeignEdge(usize),
    #[error("solution does not connect {0} and {1}")]
    Disconnected(String, String),
    #[error("solution is not 2-edge-connected; failure analysis needs a bridgeless solution")]
    NotTwoEdgeConnected,
    #[error("node {0} not found")]
    UnknownNode(String),
    #[error("satellite node {0} admits no covering cycle")]
    UncoverableLeaf(String),
}

impl From<NetworkError> for EvalError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::UnknownNode(n) => EvalError::UnknownNode(n),
            other => EvalError::UnknownNode(other.to_string()),
        }
    }
}

fn check_subset(net: &Network, sol: &EdgeSet) -> Result<(), EvalError> {
    match sol.iter().find(|&e| e >= net.edge_count()) {
        Some(e) => Err(EvalError::ForeignEdge(e)),
        None => Ok(()),
    }
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// `(total - solution) / total` in percent, rounded to two decimals.
pub fn edge_improvement_counts(total: usize, solution: usize) -> f64 {
    round2(100.0 * (total as f64 - solution as f64) / total as f64)
}

pub fn edge_improvement(net: &Network, sol: &EdgeSet) -> Result<f64, EvalError> {
    if net.edge_count() == 0 {
        return Err(EvalError::EmptyNetwork);
    }
    check_subset(net, sol)?;
    Ok(edge_improvement_counts(net.edge_count(), sol.len()))
}

pub fn min_key_rate(net: &Network, sol: &EdgeSet) -> Result<f64, EvalError> {
    check_subset(net, sol)?;
    sol.iter()
        .map(|e| net.edge(e).key_rate)
        .min_by(f64::total_cmp)
        .ok_or(EvalError::EmptySolution)
}

/// Routed demand per edge index (full network indexing), routing inside
/// `sol` with `skip` removed.
pub fn routed_demand(net: &Network, sol: &EdgeSet, skip: Option<usize>) -> Result<Vec<f64>, EvalError> {
    let adj = SubgraphAdjacency::new(net, sol);
    routed_demand_with(net, &adj, skip)
}

pub(crate) fn routed_demand_with(
    net: &Network,
    adj: &SubgraphAdjacency,
    skip: Option<usize>,
) -> Result<Vec<f64>, EvalError> {
    let n = net.node_count();
    let mut load = vec![0.0; net.edge_count()];
    for a in 0..n {
        let targets: Vec<(usize, f64)> = ((a + 1)..n)
            .map(|b| (b, net.demand(a, b)))
            .filter(|&(_, d)| d > 0.0)
            .collect();
        if targets.is_empty() {
            continue;
        }
        let parent = adj.bfs_tree(a, skip);
        for (b, d) in targets {
            let mut x = b;
            while x != a {
                let (p, e) = parent[x].ok_or_else(|| {
                    EvalError::Disconnected(net.id(a).0.clone(), net.id(b).0.clone())
                })?;
                load[e] += d;
                x = p;
            }
        }
    }
    Ok(load)
}

/// Load per solution edge in percent of its key rate.
pub fn traffic_load(net: &Network, sol: &EdgeSet) -> Result<BTreeMap<usize, f64>, EvalError> {
    check_subset(net, sol)?;
    let routed = routed_demand(net, sol, None)?;
    Ok(sol
        .iter()
        .map(|e| (e, 100.0 * routed[e] / net.edge(e).key_rate))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureLoad {
    /// Per solution edge `k`: the highest load on `k` over the intact state
    /// and every single failure of another solution edge.
    pub per_edge: BTreeMap<usize, f64>,
    pub max: f64,
}

pub fn failure_load(net: &Network, sol: &EdgeSet) -> Result<FailureLoad, EvalError> {
    check_subset(net, sol)?;
    if sol.len() < 2 || !is_two_edge_connected(net, sol) {
        return Err(EvalError::NotTwoEdgeConnected);
    }
    let adj = SubgraphAdjacency::new(net, sol);
    let normal = routed_demand_with(net, &adj, None)?;
    let mut per_edge: BTreeMap<usize, f64> = sol
        .iter()
        .map(|e| (e, 100.0 * normal[e] / net.edge(e).key_rate))
        .collect();
    for failed in sol.iter() {
        let routed = routed_demand_with(net, &adj, Some(failed))?;
        for k in sol.iter().filter(|&k| k != failed) {
            let load = 100.0 * routed[k] / net.edge(k).key_rate;
            let slot = per_edge.get_mut(&k).unwrap();
            if load > *slot {
                *slot = load;
            }
        }
    }
    let max = per_edge.values().copied().fold(0.0, f64::max);
    Ok(FailureLoad { per_edge, max })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeLoad {
    pub u: String,
    pub v: String,
    pub key_rate: f64,
    pub load_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_failure_load_pct: Option<f64>,
}

/// Metrics and loads of one solution; percentages rounded to two decimals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub edge_improvement: f64,
    pub min_key_rate: f64,
    pub edges: Vec<EdgeLoad>,
    /// Maximum worst-case failure load when the failure sweep ran, otherwise
    /// the maximum regular load.
    pub max_load: f64,
    pub failure_analysis: bool,
}

impl EvaluationReport {
    pub fn build(net: &Network, sol: &EdgeSet, with_failure: bool) -> Result<Self, EvalError> {
        let loads = traffic_load(net, sol)?;
        let failure = if with_failure {
            Some(failure_load(net, sol)?)
        } else {
            None
        };
        let edges = sol
            .iter()
            .map(|e| {
                let edge = net.edge(e);
                EdgeLoad {
                    u: net.id(edge.u).0.clone(),
                    v: net.id(edge.v).0.clone(),
                    key_rate: edge.key_rate,
                    load_pct: round2(loads[&e]),
                    worst_failure_load_pct: failure.as_ref().map(|f| round2(f.per_edge[&e])),
                }
            })
            .collect();
        let max_load = match &failure {
            Some(f) => f.max,
            None => loads.values().copied().fold(0.0, f64::max),
        };
        Ok(EvaluationReport {
            edge_improvement: edge_improvement(net, sol)?,
            min_key_rate: min_key_rate(net, sol)?,
            edges,
            max_load: round2(max_load),
            failure_analysis: failure.is_some(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// `u,v,key_rate,load_pct,worst_failure_load_pct` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,key_rate,load_pct,worst_failure_load_pct\n");
        for e in &self.edges {
            let worst = e
                .worst_failure_load_pct
                .map(|w| w.to_string())
                .unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", e.u, e.v, e.key_rate, e.load_pct, worst).unwrap();
        }
        out
    }
}

/// Tree path between two nodes of a spanning tree, as edge indices.
fn tree_path(adj: &SubgraphAdjacency, from: usize, to: usize) -> Vec<usize> {
    let parent = adj.bfs_tree(from, None);
    let mut edges = Vec::new();
    let mut x = to;
    while x != from {
        let (p, e) = parent[x].expect("tree is spanning");
        edges.push(e);
        x = p;
    }
    edges
}

/// MST by inverse key rate, then circles closed around its leaves.
///
/// For each leaf not yet on a chosen circle, every non-tree edge at the leaf
/// closes a fundamental cycle; the longest one wins, then the one with the
/// highest total key rate, then canonical edge order. Any tree edge still
/// acting as a bridge afterwards is covered the same way by the best non-tree
/// edge crossing its cut.
pub fn circle_heuristic(net: &Network, start: &str) -> Result<PlanSolution, EvalError> {
    net.require_node(start)?;
    let full = EdgeSet::full(net);
    if !is_two_edge_connected(net, &full) {
        return Err(EvalError::NotTwoEdgeConnected);
    }
    let mst = minimum_spanning_tree(net, MstWeight::InverseKeyRate);
    let tree = SubgraphAdjacency::new(net, &mst);
    let n = net.node_count();

    let cycle_of = |chord: usize| -> Vec<usize> {
        let e = net.edge(chord);
        let mut edges = tree_path(&tree, e.u, e.v);
        edges.push(chord);
        edges
    };
    let score = |cycle: &[usize]| -> (usize, f64) {
        (cycle.len(), cycle.iter().map(|&e| net.edge(e).key_rate).sum())
    };
    let better = |a: &(usize, (usize, f64)), b: &(usize, (usize, f64))| {
        let ((ea, (la, ra)), (eb, (lb, rb))) = (a, b);
        la.cmp(lb)
            .then(ra.total_cmp(rb))
            .then(eb.cmp(ea))
            .is_gt()
    };

    let mut chosen = mst.clone();
    let mut closing = Vec::new();
    let mut covered = vec![false; n];
    let leaves: Vec<usize> = (0..n).filter(|&v| tree.neighbors(v).len() == 1).collect();
    for &leaf in &leaves {
        if covered[leaf] {
            continue;
        }
        let mut best: Option<(usize, (usize, f64))> = None;
        for &(_, e) in net.neighbors(leaf) {
            if mst.contains(e) {
                continue;
            }
            let cand = (e, score(&cycle_of(e)));
            if best.as_ref().map_or(true, |b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        let (chord, _) = best.ok_or_else(|| EvalError::UncoverableLeaf(net.id(leaf).0.clone()))?;
        for e in cycle_of(chord) {
            covered[net.edge(e).u] = true;
            covered[net.edge(e).v] = true;
        }
        if chosen.insert(chord) {
            closing.push(chord);
        }
    }

    loop {
        let bridges = find_bridges(net, &chosen).expect("contains a spanning tree");
        let Some(bridge) = bridges.iter().next() else {
            break;
        };
        let comp = SubgraphAdjacency::new(net, &chosen).components(Some(bridge));
        let mut best: Option<(usize, (usize, f64))> = None;
        for e in 0..net.edge_count() {
            let edge = net.edge(e);
            if chosen.contains(e) || comp[edge.u] == comp[edge.v] {
                continue;
            }
            let cand = (e, score(&cycle_of(e)));
            if best.as_ref().map_or(true, |b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        let (chord, _) = best.ok_or(EvalError::NotTwoEdgeConnected)?;
        chosen.insert(chord);
        closing.push(chord);
    }

    let pairs = |set: &[usize]| -> Vec<(String, String)> {
        set.iter()
            .map(|&e| (net.id(net.edge(e).u).0.clone(), net.id(net.edge(e).v).0.clone()))
            .collect()
    };
    let mst_list: Vec<usize> = mst.iter().collect();
    PlanSolution::new(
        net,
        chosen,
        Provenance::Heuristic {
            start: start.to_string(),
            mst_edges: pairs(&mst_list),
            closing_edges: pairs(&closing),
        },
    )
}
