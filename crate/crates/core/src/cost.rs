//! Edge and path cost arithmetic for the path-based planners.
//!
//! Edge cost: `0.9^Q * max_degree * |N| / key_rate^2`, where `Q` counts how
//! often the edge was picked in earlier iterations. A path's basic cost is
//! `len * max edge cost` when a later edge has a lower key rate than the first
//! one (a bottleneck), else `len * first edge cost`. Basic costs are then split
//! into four quartile classes and divided by a class factor times the length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Path;
use crate::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("nonpositive key rate {0}")]
    NonPositiveKeyRate(f64),
    #[error("no paths to classify")]
    NoPaths,
}

/// Discount earned by an edge chosen `q` times: `1 - 0.9^q`.
pub fn discount_factor(q: u32) -> f64 {
    1.0 - 0.9_f64.powi(q as i32)
}

pub fn edge_cost(key_rate: f64, q: u32, max_degree: usize, n_nodes: usize) -> Result<f64, CostError> {
    if !(key_rate > 0.0) {
        return Err(CostError::NonPositiveKeyRate(key_rate));
    }
    let inv = 1.0 / key_rate;
    Ok((1.0 - discount_factor(q)) * max_degree as f64 * n_nodes as f64 * inv * inv)
}

/// Per-edge selection counts, indexed by edge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscountState {
    counts: Vec<u32>,
}

impl DiscountState {
    pub fn new(edge_count: usize) -> Self {
        DiscountState {
            counts: vec![0; edge_count],
        }
    }

    pub fn count(&self, edge: usize) -> u32 {
        self.counts[edge]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Counts each distinct edge once.
    pub fn record<I: IntoIterator<Item = usize>>(&mut self, edges: I) {
        let mut seen: Vec<usize> = edges.into_iter().collect();
        seen.sort_unstable();
        seen.dedup();
        for e in seen {
            self.counts[e] += 1;
        }
    }
}

/// Edge costs for every network edge under the given discount.
pub fn edge_costs(net: &Network, discount: &DiscountState) -> Vec<f64> {
    let (deg, n) = (net.max_degree(), net.node_count());
    net.edges()
        .iter()
        .enumerate()
        .map(|(i, e)| edge_cost(e.key_rate, discount.count(i), deg, n).expect("validated key rate"))
        .collect()
}

/// A later edge has a strictly lower key rate than the first edge.
pub fn has_bottleneck(net: &Network, path: &Path) -> bool {
    let edges = path.edges(net);
    let first = net.edge(edges[0]).key_rate;
    edges[1..].iter().any(|&e| net.edge(e).key_rate < first)
}

pub fn path_cost_basic(net: &Network, path: &Path, edge_costs: &[f64]) -> f64 {
    let edges = path.edges(net);
    let len = edges.len() as f64;
    if has_bottleneck(net, path) {
        len * edges.iter().map(|&e| edge_costs[e]).fold(f64::MIN, f64::max)
    } else {
        len * edge_costs[edges[0]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathClass {
    Excellent,
    Good,
    Worse,
    Worst,
}

impl PathClass {
    pub fn divisor(self) -> f64 {
        match self {
            PathClass::Worst => 0.25,
            PathClass::Worse => 0.5,
            PathClass::Good => 2.0,
            PathClass::Excellent => 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Median, then medians of the lower and upper halves (middle element
/// excluded for odd counts; a single value is its own quartiles).
pub fn quartiles(costs: &[f64]) -> Option<Quartiles> {
    if costs.is_empty() {
        return None;
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = median_of(&sorted);
    if n == 1 {
        return Some(Quartiles {
            q1: median,
            median,
            q3: median,
        });
    }
    let half = n / 2;
    Some(Quartiles {
        q1: median_of(&sorted[..half]),
        median,
        q3: median_of(&sorted[n - half..]),
    })
}

/// Boundary values fall to the better class.
pub fn classify_paths(costs: &[f64]) -> Result<Vec<PathClass>, CostError> {
    let q = quartiles(costs).ok_or(CostError::NoPaths)?;
    Ok(costs
        .iter()
        .map(|&c| {
            if c <= q.q1 {
                PathClass::Excellent
            } else if c <= q.median {
                PathClass::Good
            } else if c <= q.q3 {
                PathClass::Worse
            } else {
                PathClass::Worst
            }
        })
        .collect())
}

pub fn final_path_cost(basic: f64, class: PathClass, len: usize) -> f64 {
    basic / (class.divisor() * len as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyMode {
    /// Spanning (N:N) QUBO: `A = B * ceil(2 * max_cost) + 1`.
    Nn,
    /// Redundancy QUBO: `A = B * ceil(2 * max_cost)`.
    Redundancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    /// Constraint weight.
    pub a: f64,
    /// Cost weight.
    pub b: f64,
}

pub fn penalty_factors(max_cost: f64, mode: PenaltyMode) -> Penalties {
    let b = 0.5;
    let scaled = b * (2.0 * max_cost).ceil();
    let a = match mode {
        PenaltyMode::Nn => scaled + 1.0,
        PenaltyMode::Redundancy => scaled,
    };
    Penalties { a, b }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathCost {
    pub basic: f64,
    pub class: PathClass,
    pub cost: f64,
}

/// Costs of one set of paths, classified together.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTable {
    pub edge_costs: Vec<f64>,
    pub paths: Vec<PathCost>,
    pub max_cost: f64,
}

impl CostTable {
    pub fn build(net: &Network, paths: &[Path], discount: &DiscountState) -> Result<CostTable, CostError> {
        let edge_costs = edge_costs(net, discount);
        Self::with_edge_costs(net, paths, edge_costs)
    }

    pub fn with_edge_costs(net: &Network, paths: &[Path], edge_costs: Vec<f64>) -> Result<CostTable, CostError> {
        let basic: Vec<f64> = paths
            .iter()
            .map(|p| path_cost_basic(net, p, &edge_costs))
            .collect();
        let classes = classify_paths(&basic)?;
        let paths: Vec<PathCost> = paths
            .iter()
            .zip(basic.iter().zip(classes))
            .map(|(p, (&basic, class))| PathCost {
                basic,
                class,
                cost: final_path_cost(basic, class, p.len()),
            })
            .collect();
        let max_cost = paths.iter().map(|p| p.cost).fold(0.0, f64::max);
        Ok(CostTable {
            edge_costs,
            paths,
            max_cost,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;
    use approx::assert_relative_eq;

    #[test]
    fn discount_values() {
        assert_eq!(discount_factor(0), 0.0);
        assert_relative_eq!(discount_factor(1), 0.1, epsilon = 1e-15);
        assert_relative_eq!(discount_factor(2), 0.19, epsilon = 1e-15);
    }

    #[test]
    fn edge_cost_values() {
        assert_relative_eq!(edge_cost(2.0, 0, 2, 3).unwrap(), 1.5);
        assert_relative_eq!(edge_cost(10.0, 0, 2, 3).unwrap(), 0.06, epsilon = 1e-15);
        assert!(edge_cost(10.0, 200, 2, 3).unwrap() < 1e-9);
        assert!(edge_cost(0.0, 0, 2, 3).is_err());
    }

    fn line(ab: f64, bc: f64) -> Network {
        NetworkBuilder::new()
            .edge("a", "b", ab)
            .edge("b", "c", bc)
            .build()
            .unwrap()
    }

    #[test]
    fn basic_path_costs() {
        // max_degree 2, |N| = 3
        let net = line(10.0, 5.0);
        let costs = edge_costs(&net, &DiscountState::new(2));
        assert_relative_eq!(costs[0], 0.06, epsilon = 1e-15);
        assert_relative_eq!(costs[1], 0.24, epsilon = 1e-15);
        let p = Path::from_ids(&net, &["a", "b", "c"]).unwrap();
        assert!(has_bottleneck(&net, &p));
        assert_relative_eq!(path_cost_basic(&net, &p, &costs), 0.48, epsilon = 1e-15);

        let net = line(5.0, 10.0);
        let costs = edge_costs(&net, &DiscountState::new(2));
        let p = Path::from_ids(&net, &["a", "b", "c"]).unwrap();
        assert!(!has_bottleneck(&net, &p));
        assert_relative_eq!(path_cost_basic(&net, &p, &costs), 2.0 * costs[0]);

        let single = Path::from_ids(&net, &["a", "b"]).unwrap();
        assert_relative_eq!(path_cost_basic(&net, &single, &costs), costs[0]);
    }

    #[test]
    fn classification() {
        use PathClass::*;
        assert_eq!(
            classify_paths(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![Excellent, Good, Worse, Worst]
        );
        assert_eq!(classify_paths(&[2.0, 2.0, 2.0]).unwrap(), vec![Excellent; 3]);
        assert_eq!(classify_paths(&[7.0]).unwrap(), vec![Excellent]);
        assert_eq!(classify_paths(&[]), Err(CostError::NoPaths));
    }

    #[test]
    fn final_costs() {
        assert_relative_eq!(final_path_cost(0.48, PathClass::Excellent, 2), 0.06, epsilon = 1e-15);
        assert_relative_eq!(final_path_cost(0.48, PathClass::Worst, 2), 0.96, epsilon = 1e-15);
        assert!(final_path_cost(1.0, PathClass::Good, 2) < 1.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(penalty_factors(10.0, PenaltyMode::Nn), Penalties { a: 11.0, b: 0.5 });
        assert_eq!(penalty_factors(10.0, PenaltyMode::Redundancy), Penalties { a: 10.0, b: 0.5 });
        assert_eq!(penalty_factors(0.3, PenaltyMode::Nn).a, 1.5);
    }

    #[test]
    fn discount_state_counts_edges_once() {
        let mut d = DiscountState::new(3);
        d.record([0, 0, 2]);
        d.record([2]);
        assert_eq!(d.counts(), &[1, 0, 2]);
    }
}
