//! Classical simulated annealing directly over edge subsets.
//!
//! Energy is `r + qkd_weight * |edges|`, where `r` sums demand over key rate
//! along each pair's hop-shortest route. A neighbor toggles a random set of
//! edges, resampled until the candidate stays connected (and bridgeless in
//! redundancy mode). Acceptance adds `beta * w` to the energy gain, `w`
//! counting consecutive rejections.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{routed_demand, EvalError};
use crate::graph::{is_connected, is_two_edge_connected, SubgraphAdjacency};
use crate::network::{EdgeSet, Network};
use crate::plan::{PlanSolution, Provenance};
use crate::rng::sub_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub alpha: f64,
    pub beta: f64,
    pub qkd_weight: f64,
    pub redundancy_mode: bool,
    pub seed: u64,
    /// Independent chains per run; the best one is returned.
    pub restarts: usize,
    /// Largest toggled edge set per move (at least 2).
    pub subset_max: usize,
    /// Draws per neighbor before a proposal counts as rejected.
    pub max_attempts: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            t_start: 1000.0,
            t_end: 1e-4,
            alpha: 0.9,
            beta: 0.04,
            qkd_weight: 100.0,
            redundancy_mode: false,
            seed: 0,
            restarts: 20,
            subset_max: 3,
            max_attempts: 1000,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.t_end > 0.0 && self.t_end < self.t_start) {
            return bad("need 0 < t_end < t_start");
        }
        if !(self.beta >= 0.0) {
            return bad("beta must be nonnegative");
        }
        if self.restarts == 0 || self.max_attempts == 0 || self.subset_max < 2 {
            return bad("restarts and attempts must be positive, subset_max at least 2");
        }
        Ok(())
    }

    /// Temperatures visited, one proposal each.
    pub fn temperatures(&self) -> Vec<f64> {
        std::iter::successors(Some(self.t_start), |t| Some(t * self.alpha))
            .take_while(|&t| t > self.t_end)
            .collect()
    }
}

pub fn sa_energy(net: &Network, candidate: &EdgeSet, qkd_weight: f64) -> Result<f64, EvalError> {
    if let Some(e) = candidate.iter().find(|&e| e >= net.edge_count()) {
        return Err(EvalError::ForeignEdge(e));
    }
    if !is_connected(net, candidate) {
        let comp = SubgraphAdjacency::new(net, candidate).components(None);
        let stray = (0..net.node_count()).find(|&v| comp[v] != comp[0]).unwrap_or(0);
        return Err(EvalError::Disconnected(net.id(0).0.clone(), net.id(stray).0.clone()));
    }
    let routed = routed_demand(net, candidate, None)?;
    let r: f64 = candidate
        .iter()
        .map(|e| routed[e] / net.edge(e).key_rate)
        .sum();
    Ok(r + qkd_weight * candidate.len() as f64)
}

fn feasible(net: &Network, edges: &EdgeSet, redundancy_mode: bool) -> bool {
    if redundancy_mode {
        is_two_edge_connected(net, edges)
    } else {
        is_connected(net, edges)
    }
}

/// Toggles `k` distinct random edges, `k` uniform in `2..=subset_max`
/// (capped by the edge count), redrawing until the mode's connectivity
/// holds. `None` after `max_attempts` draws.
pub fn sa_neighbor<R: Rng>(
    net: &Network,
    candidate: &EdgeSet,
    rng: &mut R,
    redundancy_mode: bool,
    subset_max: usize,
    max_attempts: usize,
) -> Option<EdgeSet> {
    let m = net.edge_count();
    if m < 2 {
        return None;
    }
    let hi = subset_max.min(m).max(2);
    for _ in 0..max_attempts {
        let k = rng.gen_range(2..=hi);
        let toggle: EdgeSet = sample(rng, m, k).into_iter().collect();
        let next = candidate.symmetric_difference(&toggle);
        if feasible(net, &next, redundancy_mode) {
            return Some(next);
        }
    }
    None
}

/// `min(1, exp((e - e_new + beta * w) / t))`.
pub fn sa_accept(e: f64, e_new: f64, w: u64, t: f64, beta: f64) -> f64 {
    ((e - e_new + beta * w as f64) / t).exp().min(1.0)
}

struct Chain {
    best: EdgeSet,
    energy: f64,
}

fn run_chain(net: &Network, config: &SaConfig, temps: &[f64], seed: u64) -> Result<Chain, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = EdgeSet::full(net);
    let mut e = sa_energy(net, &current, config.qkd_weight)?;
    let mut best = Chain {
        best: current.clone(),
        energy: e,
    };
    let mut w: u64 = 0;
    for &t in temps {
        let Some(next) = sa_neighbor(
            net,
            &current,
            &mut rng,
            config.redundancy_mode,
            config.subset_max,
            config.max_attempts,
        ) else {
            w += 1;
            continue;
        };
        let e_new = sa_energy(net, &next, config.qkd_weight)?;
        if rng.gen::<f64>() < sa_accept(e, e_new, w, t, config.beta) {
            current = next;
            e = e_new;
            w = 0;
            if e < best.energy {
                best = Chain {
                    best: current.clone(),
                    energy: e,
                };
            }
        } else {
            w += 1;
        }
    }
    Ok(best)
}

/// One annealing run: independent chains from the full edge set, the lowest
/// energy wins (ties to the lower chain index).
pub fn run_sa(net: &Network, config: &SaConfig) -> Result<PlanSolution, BaselineError> {
    config.validate()?;
    if !feasible(net, &EdgeSet::full(net), config.redundancy_mode) {
        return Err(BaselineError::Infeasible(if config.redundancy_mode {
            "network is not 2-edge-connected".into()
        } else {
            "network is not connected".into()
        }));
    }
    let temps = config.temperatures();
    let chains: Vec<Chain> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_chain(net, config, &temps, sub_seed(config.seed, "sa-baseline", r as u64)))
        .collect::<Result<_, _>>()?;
    let energies: Vec<f64> = chains.iter().map(|c| c.energy).collect();
    let (best_restart, best) = chains
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.energy.total_cmp(&b.energy).then(i.cmp(j)))
        .expect("at least one restart");
    Ok(PlanSolution::new(
        net,
        best.best,
        Provenance::SimulatedAnnealing {
            seed: config.seed,
            redundancy_mode: config.redundancy_mode,
            restarts: config.restarts,
            best_restart,
            best_energy: best.energy,
            restart_energies: energies,
        },
    )?)
}

/// `runs` independent runs; run `i` uses seed `sub_seed(config.seed, "sa-run", i)`.
pub fn run_sa_batch(net: &Network, config: &SaConfig, runs: usize) -> Result<Vec<PlanSolution>, BaselineError> {
    (0..runs)
        .map(|i| {
            let cfg = SaConfig {
                seed: sub_seed(config.seed, "sa-run", i as u64),
                ..config.clone()
            };
            run_sa(net, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;
    use approx::assert_relative_eq;

    fn triangle(demand: bool) -> Network {
        let mut b = NetworkBuilder::new()
            .edge("a", "b", 10.0)
            .edge("b", "c", 5.0)
            .edge("a", "c", 2.0);
        if demand {
            b = b.demand("a", "c", 1.0);
        }
        b.build().unwrap()
    }

    #[test]
    fn energy_by_hand() {
        let net = triangle(true);
        let cand = EdgeSet::from_pairs(&net, &[("a", "b"), ("b", "c")]).unwrap();
        assert_relative_eq!(sa_energy(&net, &cand, 100.0).unwrap(), 200.3, epsilon = 1e-12);
        let net = triangle(false);
        assert_eq!(sa_energy(&net, &EdgeSet::full(&net), 100.0).unwrap(), 300.0);
        let broken = EdgeSet::from_pairs(&net, &[("a", "b")]).unwrap();
        assert!(sa_energy(&net, &broken, 100.0).is_err());
    }

    #[test]
    fn unused_edge_costs_weight() {
        let net = NetworkBuilder::new()
            .edge("a", "b", 10.0)
            .edge("b", "c", 5.0)
            .edge("c", "d", 4.0)
            .edge("a", "d", 3.0)
            .demand("a", "b", 1.0)
            .build()
            .unwrap();
        let tree = EdgeSet::from_pairs(&net, &[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
        let more = EdgeSet::full(&net);
        let diff = sa_energy(&net, &more, 100.0).unwrap() - sa_energy(&net, &tree, 100.0).unwrap();
        assert_relative_eq!(diff, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn acceptance_values() {
        assert_eq!(sa_accept(5.0, 5.0, 0, 3.0, 0.04), 1.0);
        assert_relative_eq!(sa_accept(5.0, 8.0, 0, 3.0, 0.04), (-1.0f64).exp(), epsilon = 1e-12);
        assert_eq!(sa_accept(5.0, 4.0, 0, 3.0, 0.0), 1.0);
        let low = sa_accept(0.0, 10.0, 0, 1.0, 0.04);
        let high = sa_accept(0.0, 10.0, 1000, 1.0, 0.04);
        assert!(high > low);
    }

    #[test]
    fn neighbors_on_triangle() {
        let net = triangle(false);
        let tree = EdgeSet::from_pairs(&net, &[("a", "b"), ("b", "c")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let next = sa_neighbor(&net, &tree, &mut rng, false, 3, 1000).unwrap();
            assert_eq!(next.len(), 2);
            assert!(is_connected(&net, &next));
            assert_ne!(next, tree);
        }
        // every toggle of two or three edges disconnects the full triangle
        let full = EdgeSet::full(&net);
        assert!(sa_neighbor(&net, &full, &mut rng, false, 3, 1000).is_none());
        assert!(sa_neighbor(&net, &full, &mut rng, true, 3, 1000).is_none());
    }

    #[test]
    fn triangle_runs() {
        let net = triangle(false);
        let plan = run_sa(&net, &SaConfig::default()).unwrap();
        assert_eq!(plan.edges, EdgeSet::full(&net));
        let plan = run_sa(
            &net,
            &SaConfig {
                redundancy_mode: true,
                ..SaConfig::default()
            },
        )
        .unwrap();
        assert_eq!(plan.edges, EdgeSet::full(&net));
    }

    #[test]
    fn square_with_diagonal_reaches_tree() {
        let net = NetworkBuilder::new()
            .edge("a", "b", 4.0)
            .edge("b", "c", 3.0)
            .edge("c", "d", 2.0)
            .edge("d", "a", 1.0)
            .edge("a", "c", 5.0)
            .build()
            .unwrap();
        let plan = run_sa(&net, &SaConfig::default()).unwrap();
        assert_eq!(plan.edges.len(), 3);
        assert!(is_connected(&net, &plan.edges));
    }

    #[test]
    fn redundancy_mode_needs_bridgeless_network() {
        let net = NetworkBuilder::new()
            .edge("a", "b", 1.0)
            .edge("b", "c", 1.0)
            .build()
            .unwrap();
        let cfg = SaConfig {
            redundancy_mode: true,
            ..SaConfig::default()
        };
        assert!(matches!(run_sa(&net, &cfg), Err(BaselineError::Infeasible(_))));
    }

    #[test]
    fn deterministic() {
        let net = crate::network::reference_network(2);
        let cfg = SaConfig {
            restarts: 3,
            seed: 9,
            ..SaConfig::default()
        };
        assert_eq!(run_sa(&net, &cfg).unwrap(), run_sa(&net, &cfg).unwrap());
    }
}
