#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use qkdplan::graph::{prefix_subpaths, Path};
use qkdplan::planner::NnQubo;
use qkdplan::qubo::evaluate;
use qkdplan::{Network, NetworkBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type EdgeList = Vec<(usize, usize)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

pub fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &(a, b) in edges {
            let y = if a == x { b } else if b == x { a } else { continue };
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Remove-and-test bridge oracle.
pub fn bridges_by_removal(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    (0..edges.len())
        .filter(|&i| {
            let rest: Vec<_> = edges.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &e)| e).collect();
            !connected(n, &rest)
        })
        .map(|i| edges[i])
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every connected simple graph on `2..=max_n` nodes, one per isomorphism
/// class.
pub fn connected_graphs_up_to(max_n: usize) -> Vec<(usize, EdgeList)> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        let all = pairs(n);
        let index: HashMap<(usize, usize), usize> = all.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let perms = permutations(n);
        let mut seen = BTreeSet::new();
        for mask in 1u32..(1 << all.len()) {
            let edges: EdgeList = (0..all.len()).filter(|&i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            if !connected(n, &edges) {
                continue;
            }
            let canon = perms
                .iter()
                .map(|p| {
                    edges.iter().fold(0u32, |acc, &(a, b)| {
                        let (x, y) = (p[a].min(p[b]), p[a].max(p[b]));
                        acc | 1 << index[&(x, y)]
                    })
                })
                .min()
                .unwrap();
            if seen.insert(canon) {
                out.push((n, edges));
            }
        }
    }
    out
}

/// Random spanning tree plus `extra` random chords.
pub fn random_connected(r: &mut impl Rng, n: usize, extra: usize) -> EdgeList {
    let mut set = BTreeSet::new();
    for v in 1..n {
        let u = r.gen_range(0..v);
        set.insert((u, v));
    }
    let all = pairs(n);
    for _ in 0..extra {
        let p = all[r.gen_range(0..all.len())];
        set.insert(p);
    }
    set.into_iter().collect()
}

/// Random Hamiltonian cycle plus chords: always 2-edge-connected.
pub fn random_two_edge_connected(r: &mut impl Rng, n: usize, extra: usize) -> EdgeList {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, r.gen_range(0..=i));
    }
    let mut set = BTreeSet::new();
    for i in 0..n {
        let (a, b) = (order[i], order[(i + 1) % n]);
        set.insert((a.min(b), a.max(b)));
    }
    let all = pairs(n);
    for _ in 0..extra {
        set.insert(all[r.gen_range(0..all.len())]);
    }
    set.into_iter().collect()
}

/// Nodes are named `n0, n1, ...`; rates are two-decimal values in [1, 20).
pub fn network(r: &mut impl Rng, n: usize, edges: &[(usize, usize)], demand: f64) -> Network {
    let mut b = NetworkBuilder::new();
    for v in 0..n {
        b = b.node(format!("n{v}"));
    }
    for &(u, v) in edges {
        let rate: f64 = r.gen_range(1.0..20.0);
        b = b.edge(format!("n{u}"), format!("n{v}"), (rate * 100.0).round() / 100.0);
    }
    b.uniform_demand(demand).build().unwrap()
}

/// Minimum full energy over every assignment of an NN QUBO that satisfies
/// all constraints, found by enumerating path choices per target directly.
pub fn min_valid_nn_energy(net: &Network, q: &NnQubo) -> Option<f64> {
    let n = net.node_count();
    let position: HashMap<Vec<usize>, usize> =
        q.paths.iter().enumerate().map(|(i, p)| (p.nodes().to_vec(), i)).collect();
    let present_prefixes: Vec<Vec<usize>> = q
        .paths
        .iter()
        .map(|p: &Path| {
            prefix_subpaths(p)
                .iter()
                .filter_map(|s| position.get(s.nodes()).copied())
                .collect()
        })
        .collect();
    let targets: Vec<usize> = (0..n).filter(|&t| t != q.root).collect();
    let mut best: Option<f64> = None;
    let mut choice: Vec<Option<usize>> = vec![None; n];
    search(q, &targets, &present_prefixes, &mut choice, &mut best);
    best
}

fn assign(q: &NnQubo, pre: &[Vec<usize>], choice: &mut [Option<usize>], path: usize, log: &mut Vec<usize>) -> bool {
    let t = q.paths[path].target();
    match choice[t] {
        Some(c) => return c == path,
        None => {
            choice[t] = Some(path);
            log.push(t);
        }
    }
    pre[path].iter().all(|&s| assign(q, pre, choice, s, log))
}

fn search(q: &NnQubo, targets: &[usize], pre: &[Vec<usize>], choice: &mut Vec<Option<usize>>, best: &mut Option<f64>) {
    let Some(&t) = targets.iter().find(|&&t| choice[t].is_none()) else {
        let mut x = vec![true; q.node_count];
        x.resize(q.variable_count(), false);
        for c in choice.iter().flatten() {
            x[q.node_count + c] = true;
        }
        let e = evaluate(&q.qubo, &x).unwrap() + q.qubo.offset();
        if best.map_or(true, |b| e < b) {
            *best = Some(e);
        }
        return;
    };
    for &p in &q.by_target[t] {
        let mut log = Vec::new();
        if assign(q, pre, choice, p, &mut log) {
            search(q, targets, pre, choice, best);
        }
        for v in log {
            choice[v] = None;
        }
    }
}

/// Like [`network`], with an independent demand in [0, 1) per node pair and
/// roughly a quarter of the pairs left at zero.
pub fn network_random_demand(r: &mut impl Rng, n: usize, edges: &[(usize, usize)]) -> Network {
    let mut b = NetworkBuilder::new();
    for v in 0..n {
        b = b.node(format!("n{v}"));
    }
    for &(u, v) in edges {
        let rate: f64 = r.gen_range(1.0..20.0);
        b = b.edge(format!("n{u}"), format!("n{v}"), (rate * 100.0).round() / 100.0);
    }
    for (u, v) in pairs(n) {
        if r.gen_bool(0.75) {
            b = b.demand(format!("n{u}"), format!("n{v}"), r.gen_range(0.0..1.0));
        }
    }
    b.build().unwrap()
}

/// Hop distances from `src` using only `edges`.
pub fn hop_distances(n: usize, edges: &[(usize, usize)], src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut queue = std::collections::VecDeque::from([src]);
    while let Some(x) = queue.pop_front() {
        for &(a, b) in edges {
            let y = if a == x { b } else if b == x { a } else { continue };
            if dist[y].is_none() {
                dist[y] = Some(dist[x].unwrap() + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Number of simple paths from `src` with 1..=max_len edges, per target.
pub fn simple_path_counts(n: usize, edges: &[(usize, usize)], src: usize, max_len: usize) -> Vec<usize> {
    fn walk(edges: &[(usize, usize)], at: usize, depth: usize, max_len: usize, on: &mut [bool], count: &mut [usize]) {
        if depth == max_len {
            return;
        }
        for &(a, b) in edges {
            let y = if a == at { b } else if b == at { a } else { continue };
            if !on[y] {
                count[y] += 1;
                on[y] = true;
                walk(edges, y, depth + 1, max_len, on, count);
                on[y] = false;
            }
        }
    }
    let mut on = vec![false; n];
    let mut count = vec![0; n];
    on[src] = true;
    walk(edges, src, 0, max_len, &mut on, &mut count);
    count
}

/// Spanning tree with random edge order (Kruskal over a shuffled list).
pub fn random_spanning_tree(r: &mut impl Rng, n: usize, edges: &[(usize, usize)]) -> EdgeList {
    let mut order: Vec<(usize, usize)> = edges.to_vec();
    for i in (1..order.len()).rev() {
        order.swap(i, r.gen_range(0..=i));
    }
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        if root[x] != x {
            root[x] = find(root, root[x]);
        }
        root[x]
    }
    let mut tree = Vec::new();
    for (a, b) in order {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra != rb {
            root[ra] = rb;
            tree.push((a, b));
        }
    }
    tree
}

/// Random connected graph with exactly `m` edges (`n - 1 <= m <= n(n-1)/2`).
pub fn random_connected_exact(r: &mut impl Rng, n: usize, m: usize) -> EdgeList {
    let mut set: BTreeSet<(usize, usize)> = random_connected(r, n, 0).into_iter().collect();
    let all = pairs(n);
    while set.len() < m {
        set.insert(all[r.gen_range(0..all.len())]);
    }
    set.into_iter().collect()
}

/// Every minimum-energy assignment of `q`, by Gray-code enumeration with
/// per-variable local fields. Energies within `1e-9` (relative) of the
/// minimum count as ties; candidates are re-evaluated exactly.
pub fn all_ground_states(q: &qkdplan::qubo::QuboProblem) -> (f64, Vec<Vec<bool>>) {
    let n = q.len();
    assert!(n <= 25, "{n} variables is too many to enumerate");
    let mut field = vec![0.0; n];
    let mut adj = vec![Vec::new(); n];
    for (&(i, j), &c) in q.terms() {
        if i == j {
            field[i] += c;
        } else {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
    }
    let scale = q.terms().values().map(|c| c.abs()).sum::<f64>().max(1.0);
    let tol = 1e-9 * scale;
    let decode = |mask: u32| -> Vec<bool> { (0..n).map(|i| mask >> i & 1 == 1).collect() };
    let (mut mask, mut energy) = (0u32, 0.0);
    let mut min = 0.0;
    let mut ties = vec![0u32];
    for step in 1u32..1 << n {
        let i = step.trailing_zeros() as usize;
        mask ^= 1 << i;
        let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        energy += sign * field[i];
        for &(j, c) in &adj[i] {
            field[j] += sign * c;
        }
        if energy < min - tol {
            energy = evaluate(q, &decode(mask)).unwrap();
            min = energy;
            ties.retain(|&m| evaluate(q, &decode(m)).unwrap() <= min + tol);
            ties.push(mask);
        } else if energy <= min + tol {
            energy = evaluate(q, &decode(mask)).unwrap();
            ties.push(mask);
        }
    }
    let min = ties.iter().map(|&m| evaluate(q, &decode(m)).unwrap()).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1.0);
    let states = ties
        .into_iter()
        .map(decode)
        .filter(|x| evaluate(q, x).unwrap() - min <= tol)
        .collect();
    (min, states)
}

pub fn as_result(x: Vec<bool>, energy: f64) -> qkdplan::qubo::SolveResult {
    qkdplan::qubo::SolveResult {
        assignment: x,
        energy,
        solver: String::new(),
        restarts: 0,
        seed: 0,
        best_restart: 0,
        best_step: 0,
    }
}
