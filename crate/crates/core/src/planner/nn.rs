//! Spanning (N:N) planner: one path-selection QUBO per root node, edge
//! discounts carried between roots, and a frequency-ordered rebuild.

use std::collections::{HashMap, VecDeque};

use crate::cost::{penalty_factors, CostTable, DiscountState, Penalties, PenaltyMode};
use crate::graph::{prefix_subpaths, DisjointSets, Path, PathTable};
use crate::network::{EdgeSet, Network};
use crate::plan::{EdgeCount, NnIteration, PlanSolution, Provenance};
use crate::qubo::{AnnealSchedule, QuboBuilder, QuboProblem, QuboSolver, SolveResult};
use crate::rng::sub_seed;

use super::PlanError;

/// Path-selection QUBO rooted at one node.
///
/// Variables `0..|N|` are the node bits `x_n` (by node index), followed by one
/// bit per candidate path in `paths` order.
#[derive(Clone, Debug)]
pub struct NnQubo {
    pub qubo: QuboProblem,
    pub root: usize,
    pub node_count: usize,
    pub paths: Vec<Path>,
    /// Final cost per path, aligned with `paths`.
    pub path_costs: Vec<f64>,
    /// For each path, the indices of its proper prefixes present in `paths`.
    pub prefixes: Vec<Vec<usize>>,
    /// Path indices per target node.
    pub by_target: Vec<Vec<usize>>,
    pub penalties: Penalties,
}

impl NnQubo {
    pub fn variable_count(&self) -> usize {
        self.qubo.len()
    }

    pub fn path_variable(&self, path: usize) -> usize {
        self.node_count + path
    }
}

/// Builds `A * (T1 + T2 + T3) + B * H_B` for `root`.
///
/// T1 asks for every node bit, T2 ties each target's bit to exactly one of
/// its paths, and T3 charges a selected path once per unselected prefix.
/// `costs.paths` must align with `table.paths_from(root)`.
pub fn build_nn_qubo(
    net: &Network,
    root: usize,
    table: &PathTable,
    costs: &CostTable,
    penalties: Penalties,
) -> Result<NnQubo, PlanError> {
    let n = net.node_count();
    let paths = table.paths_from(root);
    if paths.len() != costs.paths.len() {
        return Err(PlanError::Config(format!(
            "{} paths but {} costs",
            paths.len(),
            costs.paths.len()
        )));
    }
    let mut by_target = vec![Vec::new(); n];
    for (i, p) in paths.iter().enumerate() {
        by_target[p.target()].push(i);
    }
    if let Some(t) = (0..n).find(|&t| t != root && by_target[t].is_empty()) {
        return Err(PlanError::Unreachable(net.id(t).0.clone()));
    }
    let position: HashMap<&[usize], usize> = paths
        .iter()
        .enumerate()
        .map(|(i, p)| (p.nodes(), i))
        .collect();
    let prefixes: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| {
            prefix_subpaths(p)
                .iter()
                .filter_map(|s| position.get(s.nodes()).copied())
                .collect()
        })
        .collect();

    let Penalties { a, b } = penalties;
    let mut qb = QuboBuilder::new();
    for v in 0..n {
        qb.add_variable(format!("x[{}]", net.id(v)))?;
    }
    for p in &paths {
        qb.add_variable(format!("p[{}]", p.label(net)))?;
    }
    let pvar = |i: usize| n + i;

    for v in 0..n {
        qb.add_squared(a, 1.0, &[(v, -1.0)]);
    }
    for t in (0..n).filter(|&t| t != root) {
        let mut terms = vec![(t, 1.0)];
        terms.extend(by_target[t].iter().map(|&i| (pvar(i), -1.0)));
        qb.add_squared(a, 0.0, &terms);
    }
    for (i, pre) in prefixes.iter().enumerate() {
        if pre.is_empty() {
            continue;
        }
        qb.add_linear(pvar(i), a * pre.len() as f64);
        for &s in pre {
            qb.add_quadratic(pvar(i), pvar(s), -a);
        }
    }
    for (i, c) in costs.paths.iter().enumerate() {
        qb.add_linear(pvar(i), b * c.cost);
    }

    Ok(NnQubo {
        qubo: qb.build(),
        root,
        node_count: n,
        path_costs: costs.paths.iter().map(|c| c.cost).collect(),
        paths,
        prefixes,
        by_target,
        penalties,
    })
}

/// Constraint violations of a decoded assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NnReport {
    /// Nodes whose bit is off.
    pub t1: Vec<usize>,
    /// Targets whose selected path count differs from their node bit:
    /// `(target, selected paths)`.
    pub t2: Vec<(usize, usize)>,
    /// Selected paths with at least one unselected prefix.
    pub t3: Vec<usize>,
}

impl NnReport {
    pub fn violations(&self) -> usize {
        self.t1.len() + self.t2.len() + self.t3.len()
    }

    pub fn is_valid(&self) -> bool {
        self.violations() == 0
    }
}

/// Selected paths (in variable order) and the constraint report.
pub fn decode_nn(q: &NnQubo, result: &SolveResult) -> Result<(Vec<Path>, NnReport), PlanError> {
    decode_assignment(q, &result.assignment)
}

pub(crate) fn decode_assignment(q: &NnQubo, x: &[bool]) -> Result<(Vec<Path>, NnReport), PlanError> {
    if x.len() != q.variable_count() {
        return Err(crate::qubo::QuboError::LengthMismatch {
            expected: q.variable_count(),
            got: x.len(),
        }
        .into());
    }
    let n = q.node_count;
    let on = |i: usize| x[n + i];
    let mut report = NnReport {
        t1: (0..n).filter(|&v| !x[v]).collect(),
        ..NnReport::default()
    };
    for t in (0..n).filter(|&t| t != q.root) {
        let count = q.by_target[t].iter().filter(|&&i| on(i)).count();
        if count != usize::from(x[t]) {
            report.t2.push((t, count));
        }
    }
    report.t3 = (0..q.paths.len())
        .filter(|&i| on(i) && q.prefixes[i].iter().any(|&s| !on(s)))
        .collect();
    let selected = (0..q.paths.len())
        .filter(|&i| on(i))
        .map(|i| q.paths[i].clone())
        .collect();
    Ok((selected, report))
}

/// Nodes by hop distance from `start`, ties by node order.
pub fn hop_order(net: &Network, start: usize) -> Vec<usize> {
    let n = net.node_count();
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in net.neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (dist[v], v));
    order
}

/// Edges ordered by frequency (descending), key rate (descending) and edge
/// order, added whenever they join two components, until all nodes connect.
/// Only edges with a positive frequency are eligible.
pub fn filter_build(freq: &[u32], net: &Network) -> Result<EdgeSet, PlanError> {
    if freq.len() != net.edge_count() {
        return Err(PlanError::Config(format!(
            "{} frequencies for {} edges",
            freq.len(),
            net.edge_count()
        )));
    }
    let mut order: Vec<usize> = (0..net.edge_count()).filter(|&e| freq[e] > 0).collect();
    order.sort_by(|&x, &y| {
        freq[y]
            .cmp(&freq[x])
            .then(net.edge(y).key_rate.total_cmp(&net.edge(x).key_rate))
            .then(x.cmp(&y))
    });
    let mut dsu = DisjointSets::new(net.node_count());
    let mut out = EdgeSet::new();
    for e in order {
        if dsu.set_count() == 1 {
            break;
        }
        if dsu.union(net.edge(e).u, net.edge(e).v) {
            out.insert(e);
        }
    }
    if dsu.set_count() != 1 {
        return Err(PlanError::NotSpanning);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HqaConfig {
    /// Longest candidate path in edges.
    pub max_len: usize,
    pub seed: u64,
}

impl Default for HqaConfig {
    fn default() -> Self {
        HqaConfig { max_len: 6, seed: 0 }
    }
}

impl HqaConfig {
    /// Annealing schedule sized for the per-root QUBOs, which reach several
    /// thousand variables on a 29-node network.
    pub fn planner_schedule() -> AnnealSchedule {
        AnnealSchedule {
            sweeps_per_temp: Some(1),
            restarts: 8,
            ..AnnealSchedule::default()
        }
    }
}

/// Runs every root in hop order from `start` and rebuilds one spanning tree
/// from the accumulated edge frequencies.
pub fn run_hqa(
    net: &Network,
    start: &str,
    config: &HqaConfig,
    solver: &dyn QuboSolver,
) -> Result<PlanSolution, PlanError> {
    run_hqa_traced(net, start, config, solver).map(|(plan, _)| plan)
}

/// [`run_hqa`] plus the discount state after each iteration.
pub fn run_hqa_traced(
    net: &Network,
    start: &str,
    config: &HqaConfig,
    solver: &dyn QuboSolver,
) -> Result<(PlanSolution, Vec<DiscountState>), PlanError> {
    let start_idx = net.require_node(start)?;
    if config.max_len == 0 {
        return Err(PlanError::Config("max_len must be positive".into()));
    }
    let mut discount = DiscountState::new(net.edge_count());
    let mut trace = Vec::new();
    let mut iterations = Vec::new();
    for (i, root) in hop_order(net, start_idx).into_iter().enumerate() {
        let table = PathTable::for_source(net, root, config.max_len);
        let costs = CostTable::build(net, &table.paths_from(root), &discount)?;
        let penalties = penalty_factors(costs.max_cost, PenaltyMode::Nn);
        let q = build_nn_qubo(net, root, &table, &costs, penalties)?;
        let result = solver
            .solve(&q.qubo, sub_seed(config.seed, "hqa", i as u64))
            .map_err(|source| PlanError::Solver {
                iteration: i,
                node: net.id(root).0.clone(),
                source,
            })?;
        let (selected, report) = decode_nn(&q, &result)?;
        discount.record(selected.iter().flat_map(|p| p.edges(net)));
        trace.push(discount.clone());
        iterations.push(NnIteration {
            node: net.id(root).0.clone(),
            variables: q.variable_count(),
            energy: result.energy + q.qubo.offset(),
            violations: report.violations(),
            selected_paths: selected.iter().map(|p| p.ids(net)).collect(),
        });
    }
    let edges = filter_build(discount.counts(), net)?;
    let edge_frequency = (0..net.edge_count())
        .filter(|&e| discount.count(e) > 0)
        .map(|e| EdgeCount {
            u: net.id(net.edge(e).u).0.clone(),
            v: net.id(net.edge(e).v).0.clone(),
            count: discount.count(e),
        })
        .collect();
    let plan = PlanSolution::new(
        net,
        edges,
        Provenance::Hqa {
            start: start.to_string(),
            max_len: config.max_len,
            solver: solver.name().to_string(),
            seed: config.seed,
            iterations,
            edge_frequency,
        },
    )?;
    Ok((plan, trace))
}
