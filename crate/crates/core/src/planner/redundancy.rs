//! Circle-redundancy planner: every node gets a cycle through it, built from
//! an outgoing path and an edge-disjoint return path, until no bridge is left.

use crate::cost::{penalty_factors, CostTable, DiscountState, Penalties, PenaltyMode};
use crate::graph::{find_bridges, is_connected, Path, PathTable, SubgraphAdjacency};
use crate::network::{EdgeSet, Network};
use crate::plan::{PlanSolution, Provenance, RedundancyIteration};
use crate::qubo::{evaluate, AnnealSchedule, QuboBuilder, QuboProblem, QuboSolver, SolveResult};
use crate::rng::sub_seed;

use super::PlanError;

/// Cycle through `node`: `op` runs node -> target, `ip` target -> node, and
/// the two share no edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redundancy {
    pub node: usize,
    pub target: usize,
    pub op: Path,
    pub ip: Path,
}

impl Redundancy {
    /// Total edge count of both paths.
    pub fn len(&self) -> usize {
        self.op.len() + self.ip.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self, net: &Network) -> EdgeSet {
        self.op
            .edges(net)
            .into_iter()
            .chain(self.ip.edges(net))
            .collect()
    }

    /// Distinct nodes on the cycle, ascending.
    pub fn nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.op.nodes().iter().chain(self.ip.nodes()).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Closed walk `node .. target .. node`.
    pub fn cycle(&self) -> Vec<usize> {
        let mut walk = self.op.nodes().to_vec();
        walk.extend_from_slice(&self.ip.nodes()[1..]);
        walk
    }
}

/// Accumulated bridge constraints: a node on the small side of a bridge may
/// only take a redundancy that reaches the large side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BridgeFilter {
    rules: Vec<(Vec<bool>, Vec<bool>)>,
}

impl BridgeFilter {
    pub fn identity() -> Self {
        BridgeFilter::default()
    }

    pub fn is_identity(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn accepts(&self, rd: &Redundancy) -> bool {
        let nodes = rd.nodes();
        self.rules
            .iter()
            .all(|(small, large)| !small[rd.node] || nodes.iter().any(|&v| large[v]))
    }

    pub fn extend(&mut self, other: BridgeFilter) {
        for rule in other.rules {
            if !self.rules.contains(&rule) {
                self.rules.push(rule);
            }
        }
    }
}

/// One rule per bridge of `edges`, splitting the nodes at that bridge. The
/// side with fewer nodes is the small one; on a tie, the side holding the
/// bridge's second endpoint.
pub fn bridge_workaround(net: &Network, edges: &EdgeSet, bridges: &EdgeSet) -> BridgeFilter {
    let adj = SubgraphAdjacency::new(net, edges);
    let n = net.node_count();
    let rules = bridges
        .iter()
        .map(|b| {
            let comp = adj.components(Some(b));
            let e = net.edge(b);
            let (cu, cv) = (comp[e.u], comp[e.v]);
            let size = |c: usize| comp.iter().filter(|&&x| x == c).count();
            let small_c = if size(cu) < size(cv) { cu } else { cv };
            let large_c = if small_c == cu { cv } else { cu };
            (
                (0..n).map(|v| comp[v] == small_c).collect(),
                (0..n).map(|v| comp[v] == large_c).collect(),
            )
        })
        .collect();
    BridgeFilter { rules }
}

fn disjoint(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|e| !b.contains(e))
}

/// For each target within reach, the longest accepted pairing of an outgoing
/// path with the reverse of an edge-disjoint second path. Ties keep the first
/// pair in path order. Fallback paths beyond the length bound are not used.
pub fn find_redundancies(net: &Network, node: usize, table: &PathTable, filter: &BridgeFilter) -> Vec<Redundancy> {
    let mut out = Vec::new();
    for (target, entry) in table.from_source(node) {
        if entry.fallback {
            continue;
        }
        let edges: Vec<Vec<usize>> = entry.paths.iter().map(|p| p.edges(net)).collect();
        let mut best: Option<Redundancy> = None;
        for (i, op) in entry.paths.iter().enumerate() {
            for (j, back) in entry.paths.iter().enumerate() {
                if i == j || !disjoint(&edges[i], &edges[j]) {
                    continue;
                }
                let total = op.len() + back.len();
                if best.as_ref().is_some_and(|b| b.len() >= total) {
                    continue;
                }
                let rd = Redundancy {
                    node,
                    target,
                    op: op.clone(),
                    ip: back.reversed(),
                };
                if filter.accepts(&rd) {
                    best = Some(rd);
                }
            }
        }
        out.extend(best);
    }
    out
}

/// Redundancy-selection QUBO for one node.
///
/// Variable blocks, in order: one bit per redundancy, a node bit `r_n` per
/// network node, an undirected bit `y_e` per network edge, and two directed
/// bits per edge (`u -> v` first, with `u` the lower node index).
#[derive(Clone, Debug)]
pub struct RedundancyQubo {
    pub qubo: QuboProblem,
    pub node: usize,
    pub rds: Vec<Redundancy>,
    pub input: EdgeSet,
    /// Path cost of each redundancy (outgoing plus return).
    pub rd_costs: Vec<f64>,
    /// Cost per edge, charged on directed bits of edges outside the input.
    pub edge_costs: Vec<f64>,
    /// Cost per node bit.
    pub node_cost: f64,
    pub penalties: Penalties,
    node_count: usize,
    edge_count: usize,
}

impl RedundancyQubo {
    pub fn variable_count(&self) -> usize {
        self.qubo.len()
    }

    pub fn rd_var(&self, i: usize) -> usize {
        i
    }

    pub fn node_var(&self, v: usize) -> usize {
        self.rds.len() + v
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.rds.len() + self.node_count + e
    }

    /// Directed bit of edge `e`; `forward` is lower index to higher.
    pub fn arc_var(&self, e: usize, forward: bool) -> usize {
        self.rds.len() + self.node_count + self.edge_count + 2 * e + usize::from(!forward)
    }

    /// The assignment selecting redundancy `i` with the cheapest consistent
    /// node, edge and direction bits.
    pub fn assignment_for(&self, net: &Network, i: usize) -> Vec<bool> {
        let mut x = vec![false; self.variable_count()];
        x[self.rd_var(i)] = true;
        for v in self.rds[i].nodes() {
            x[self.node_var(v)] = true;
        }
        let used = self.input.union(&self.rds[i].edges(net));
        for e in used.iter() {
            x[self.edge_var(e)] = true;
            x[self.arc_var(e, true)] = true;
        }
        x
    }
}

/// `A * (T1..T5) + B * (C1 + C2 + C3)` over the candidates of one node.
///
/// T1 and T4 make a selected redundancy switch on its node and edge bits, T2
/// ties each edge bit to exactly one direction, T3 asks for exactly one
/// redundancy and T5 keeps the input edges. Edge costs apply only to edges
/// outside the input. A is scaled from the most expensive full selection so
/// that any valid assignment beats every violating one.
pub fn build_redundancy_qubo(
    net: &Network,
    node: usize,
    rds: &[Redundancy],
    input: &EdgeSet,
    discount: &DiscountState,
) -> Result<RedundancyQubo, PlanError> {
    if rds.is_empty() {
        return Err(PlanError::NoCandidates(net.id(node).0.clone()));
    }
    let (n, m, k) = (net.node_count(), net.edge_count(), rds.len());
    let paths: Vec<Path> = rds
        .iter()
        .map(|r| r.op.clone())
        .chain(rds.iter().map(|r| r.ip.clone()))
        .collect();
    let table = CostTable::build(net, &paths, discount)?;
    let rd_costs: Vec<f64> = (0..k)
        .map(|i| table.paths[i].cost + table.paths[k + i].cost)
        .collect();
    let edge_costs = table.edge_costs;
    let min_rd = rd_costs.iter().copied().fold(f64::INFINITY, f64::min);
    let node_cost = (min_rd / (5.0 * n as f64).powi(6)).sqrt();

    let rd_edges: Vec<EdgeSet> = rds.iter().map(|r| r.edges(net)).collect();
    let rd_nodes: Vec<Vec<usize>> = rds.iter().map(Redundancy::nodes).collect();
    let max_cost = (0..k)
        .map(|i| {
            let new_edges: f64 = rd_edges[i]
                .iter()
                .filter(|&e| !input.contains(e))
                .map(|e| edge_costs[e])
                .sum();
            rd_costs[i] + new_edges + node_cost * rd_nodes[i].len() as f64
        })
        .fold(0.0, f64::max);
    let penalties = penalty_factors(max_cost, PenaltyMode::Redundancy);
    let Penalties { a, b } = penalties;

    let mut qb = QuboBuilder::new();
    for r in rds {
        qb.add_variable(format!(
            "rd[{}|{}]",
            r.op.label(net),
            r.ip.label(net)
        ))?;
    }
    for v in 0..n {
        qb.add_variable(format!("r[{}]", net.id(v)))?;
    }
    for e in 0..m {
        qb.add_variable(format!("y[{}]", net.edge_label(e)))?;
    }
    for e in 0..m {
        let edge = net.edge(e);
        let (u, v) = (net.id(edge.u), net.id(edge.v));
        qb.add_variable(format!("x[{u}>{v}]"))?;
        qb.add_variable(format!("x[{v}>{u}]"))?;
    }
    let r_var = |v: usize| k + v;
    let y_var = |e: usize| k + n + e;
    let x_var = |e: usize, fwd: bool| k + n + m + 2 * e + usize::from(!fwd);

    for i in 0..k {
        // T1: rd * (|nodes| - sum r)
        qb.add_linear(i, a * rd_nodes[i].len() as f64);
        for &v in &rd_nodes[i] {
            qb.add_quadratic(i, r_var(v), -a);
        }
        // T4: rd * (|edges| - sum y)
        qb.add_linear(i, a * rd_edges[i].len() as f64);
        for e in rd_edges[i].iter() {
            qb.add_quadratic(i, y_var(e), -a);
        }
        qb.add_linear(i, b * rd_costs[i]);
    }
    for e in 0..m {
        qb.add_squared(a, 0.0, &[(y_var(e), 1.0), (x_var(e, true), -1.0), (x_var(e, false), -1.0)]);
        if input.contains(e) {
            qb.add_squared(a, 1.0, &[(x_var(e, true), -1.0)]);
        } else {
            qb.add_linear(x_var(e, true), b * edge_costs[e]);
            qb.add_linear(x_var(e, false), b * edge_costs[e]);
        }
    }
    let all_rd: Vec<(usize, f64)> = (0..k).map(|i| (i, -1.0)).collect();
    qb.add_squared(a, 1.0, &all_rd);
    for v in 0..n {
        qb.add_linear(r_var(v), b * node_cost);
    }

    Ok(RedundancyQubo {
        qubo: qb.build(),
        node,
        rds: rds.to_vec(),
        input: input.clone(),
        rd_costs,
        edge_costs,
        node_cost,
        penalties,
        node_count: n,
        edge_count: m,
    })
}

/// Decoded redundancy assignment with per-term constraint values.
#[derive(Clone, Debug, PartialEq)]
pub struct RedundancyDecode {
    /// Indices of selected redundancies.
    pub selected: Vec<usize>,
    pub nodes: Vec<usize>,
    pub edges: EdgeSet,
    /// Unscaled values of T1..T5; all zero for a valid assignment.
    pub terms: [u64; 5],
    /// Exactly one redundancy, node and edge bits matching it plus the input,
    /// and one direction per used edge (the forward one on input edges).
    pub consistent: bool,
}

impl RedundancyDecode {
    pub fn violations(&self) -> u64 {
        self.terms.iter().sum()
    }
}

pub fn decode_redundancy(net: &Network, q: &RedundancyQubo, result: &SolveResult) -> Result<RedundancyDecode, PlanError> {
    decode_redundancy_bits(net, q, &result.assignment)
}

pub(crate) fn decode_redundancy_bits(net: &Network, q: &RedundancyQubo, x: &[bool]) -> Result<RedundancyDecode, PlanError> {
    if x.len() != q.variable_count() {
        return Err(crate::qubo::QuboError::LengthMismatch {
            expected: q.variable_count(),
            got: x.len(),
        }
        .into());
    }
    let (n, m) = (q.node_count, q.edge_count);
    let selected: Vec<usize> = (0..q.rds.len()).filter(|&i| x[q.rd_var(i)]).collect();
    let nodes: Vec<usize> = (0..n).filter(|&v| x[q.node_var(v)]).collect();
    let edges: EdgeSet = (0..m).filter(|&e| x[q.edge_var(e)]).collect();
    let bit = |i: usize| u64::from(x[i]);

    let mut terms = [0u64; 5];
    for &i in &selected {
        let rd = &q.rds[i];
        terms[0] += rd.nodes().iter().filter(|&&v| !x[q.node_var(v)]).count() as u64;
        terms[3] += rd.edges(net).iter().filter(|&e| !x[q.edge_var(e)]).count() as u64;
    }
    for e in 0..m {
        let d = bit(q.edge_var(e)) as i64 - bit(q.arc_var(e, true)) as i64 - bit(q.arc_var(e, false)) as i64;
        terms[1] += (d * d) as u64;
        if q.input.contains(e) && !x[q.arc_var(e, true)] {
            terms[4] += 1;
        }
    }
    let d = 1 - selected.len() as i64;
    terms[2] = (d * d) as u64;

    let consistent = selected.len() == 1 && terms[1] == 0 && terms[4] == 0 && {
        let rd = &q.rds[selected[0]];
        nodes == rd.nodes() && edges == q.input.union(&rd.edges(net))
    };
    Ok(RedundancyDecode {
        selected,
        nodes,
        edges,
        terms,
        consistent,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RedundancyConfig {
    pub max_len: usize,
    pub seed: u64,
    /// Upper bound on bridge-workaround rounds.
    pub max_rounds: usize,
}

impl Default for RedundancyConfig {
    fn default() -> Self {
        RedundancyConfig {
            max_len: 6,
            seed: 0,
            max_rounds: 10,
        }
    }
}

impl RedundancyConfig {
    /// Annealing schedule for the circle QUBOs. These are small, but the
    /// all-zero assignment is a deep local minimum, so each temperature gets
    /// several sweeps.
    pub fn planner_schedule() -> AnnealSchedule {
        AnnealSchedule {
            sweeps_per_temp: Some(10),
            restarts: 16,
            ..AnnealSchedule::default()
        }
    }
}

fn id_pairs(net: &Network, edges: impl IntoIterator<Item = usize>) -> Vec<(String, String)> {
    edges
        .into_iter()
        .map(|e| (net.id(net.edge(e).u).0.clone(), net.id(net.edge(e).v).0.clone()))
        .collect()
}

/// Extends the spanning `input` with one circle per uncovered node until the
/// result has no bridge, rerunning under bridge constraints when needed.
///
/// Nodes are visited in ascending order of their candidate count. When a
/// solve returns no single redundancy, the selected candidate with the lowest
/// QUBO energy is used instead, or the cheapest candidate if none is selected.
pub fn run_redundancy(
    net: &Network,
    input: &EdgeSet,
    config: &RedundancyConfig,
    solver: &dyn QuboSolver,
) -> Result<PlanSolution, PlanError> {
    if config.max_len == 0 || config.max_rounds == 0 {
        return Err(PlanError::Config("max_len and max_rounds must be positive".into()));
    }
    if input.iter().any(|e| e >= net.edge_count()) || !is_connected(net, input) {
        return Err(PlanError::InputNotSpanning);
    }
    let full = EdgeSet::full(net);
    let unremovable = find_bridges(net, &full).map_err(|_| PlanError::InputNotSpanning)?;
    if !unremovable.is_empty() {
        return Err(PlanError::NoRedundancy(id_pairs(net, unremovable.iter())));
    }

    let n = net.node_count();
    let tables: Vec<PathTable> = (0..n)
        .map(|v| PathTable::for_source(net, v, config.max_len))
        .collect();
    let discount = DiscountState::new(net.edge_count());
    let mut filter = BridgeFilter::identity();
    let mut iterations = Vec::new();

    for round in 0..config.max_rounds {
        let candidates: Vec<Vec<Redundancy>> = (0..n)
            .map(|v| find_redundancies(net, v, &tables[v], &filter))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| (candidates[v].len(), v));

        let mut working = input.clone();
        let mut covered = vec![false; n];
        for (step, &v) in order.iter().enumerate() {
            if covered[v] || candidates[v].is_empty() {
                continue;
            }
            let q = build_redundancy_qubo(net, v, &candidates[v], &working, &discount)?;
            let seed = sub_seed(config.seed, "redundancy", (round * n + step) as u64);
            let result = solver.solve(&q.qubo, seed).map_err(|source| PlanError::Solver {
                iteration: round * n + step,
                node: net.id(v).0.clone(),
                source,
            })?;
            let decoded = decode_redundancy(net, &q, &result)?;
            let chosen = pick(net, &q, &decoded);
            let rd = &q.rds[chosen];
            let rd_edges = rd.edges(net);
            let added: Vec<usize> = rd_edges.iter().filter(|&e| !working.contains(e)).collect();
            for x in rd.nodes() {
                covered[x] = true;
            }
            working = working.union(&rd_edges);
            iterations.push(RedundancyIteration {
                round,
                node: net.id(v).0.clone(),
                candidates: q.rds.len(),
                variables: q.variable_count(),
                energy: result.energy + q.qubo.offset(),
                violations: decoded.violations() as usize,
                cycle: rd.cycle().iter().map(|&x| net.id(x).0.clone()).collect(),
                added_edges: id_pairs(net, added),
            });
        }

        let bridges = find_bridges(net, &working).expect("working set contains the spanning input");
        if bridges.is_empty() {
            return Ok(PlanSolution::new(
                net,
                working,
                Provenance::Redundancy {
                    max_len: config.max_len,
                    solver: solver.name().to_string(),
                    seed: config.seed,
                    rounds: round + 1,
                    input_edges: id_pairs(net, input.iter()),
                    iterations,
                },
            )?);
        }
        if round + 1 == config.max_rounds {
            return Err(PlanError::BridgesRemain {
                rounds: config.max_rounds,
                bridges: id_pairs(net, bridges.iter()),
            });
        }
        filter.extend(bridge_workaround(net, &working, &bridges));
    }
    unreachable!("loop returns on its last round")
}

fn pick(net: &Network, q: &RedundancyQubo, decoded: &RedundancyDecode) -> usize {
    if decoded.selected.len() == 1 {
        return decoded.selected[0];
    }
    let pool: Vec<usize> = if decoded.selected.is_empty() {
        (0..q.rds.len()).collect()
    } else {
        decoded.selected.clone()
    };
    let energy = |i: usize| evaluate(&q.qubo, &q.assignment_for(net, i)).expect("length matches");
    pool.into_iter()
        .min_by(|&x, &y| energy(x).total_cmp(&energy(y)).then(x.cmp(&y)))
        .expect("candidates are nonempty")
}
