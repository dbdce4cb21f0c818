//! Path enumeration, shortest paths, spanning trees and bridge detection.
//!
//! Everything here works on node and edge indices of a [`Network`]. Algorithms
//! that run on a subset of edges take an [`EdgeSet`] and build a small
//! adjacency list for it with [`SubgraphAdjacency`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::network::{EdgeSet, Network, NetworkError};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("edge set does not connect node {0}")]
    Disconnected(String),
    #[error("source and target are the same node {0}")]
    SameEndpoints(String),
}

/// Simple path as a node-index sequence with at least one edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<usize>,
}

impl Path {
    /// Panics if `nodes` has fewer than two entries.
    pub fn new(nodes: Vec<usize>) -> Self {
        assert!(nodes.len() >= 2, "a path needs at least one edge");
        Path { nodes }
    }

    /// Checks simplicity and that every hop is a network edge.
    pub fn checked(net: &Network, nodes: Vec<usize>) -> Option<Self> {
        if nodes.len() < 2 {
            return None;
        }
        let mut seen = vec![false; net.node_count()];
        for &n in &nodes {
            if n >= net.node_count() || std::mem::replace(&mut seen[n], true) {
                return None;
            }
        }
        if nodes.windows(2).any(|w| net.edge_between(w[0], w[1]).is_none()) {
            return None;
        }
        Some(Path { nodes })
    }

    pub fn from_ids(net: &Network, ids: &[&str]) -> Option<Self> {
        let nodes = ids
            .iter()
            .map(|id| net.node_index(id))
            .collect::<Option<Vec<_>>>()?;
        Self::checked(net, nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn source(&self) -> usize {
        self.nodes[0]
    }

    pub fn target(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Edge indices in travel order.
    pub fn edges(&self, net: &Network) -> Vec<usize> {
        self.nodes
            .windows(2)
            .map(|w| net.edge_between(w[0], w[1]).expect("path hop is a network edge"))
            .collect()
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { nodes }
    }

    pub fn ids(&self, net: &Network) -> Vec<String> {
        self.nodes.iter().map(|&n| net.id(n).0.clone()).collect()
    }

    pub fn label(&self, net: &Network) -> String {
        self.ids(net).join("-")
    }

    pub fn display<'a>(&'a self, net: &'a Network) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Path, &'a Network);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.label(self.1))
            }
        }
        D(self, net)
    }
}

/// Length first, then node sequence.
impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All simple paths from `source` with at most `max_len` edges, grouped by
/// target and sorted by length then node sequence.
pub fn enumerate_paths(
    net: &Network,
    source: &str,
    max_len: usize,
) -> Result<BTreeMap<usize, Vec<Path>>, GraphError> {
    let src = net.require_node(source)?;
    Ok(enumerate_paths_from(net, src, max_len))
}

pub fn enumerate_paths_from(net: &Network, src: usize, max_len: usize) -> BTreeMap<usize, Vec<Path>> {
    let mut out: BTreeMap<usize, Vec<Path>> = BTreeMap::new();
    let mut on_path = vec![false; net.node_count()];
    let mut stack = vec![src];
    on_path[src] = true;
    fn dfs(
        net: &Network,
        max_len: usize,
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut BTreeMap<usize, Vec<Path>>,
    ) {
        if stack.len() > max_len {
            return;
        }
        let last = *stack.last().unwrap();
        for &(next, _) in net.neighbors(last) {
            if on_path[next] {
                continue;
            }
            stack.push(next);
            on_path[next] = true;
            out.entry(next).or_default().push(Path {
                nodes: stack.clone(),
            });
            dfs(net, max_len, stack, on_path, out);
            on_path[next] = false;
            stack.pop();
        }
    }
    if max_len > 0 {
        dfs(net, max_len, &mut stack, &mut on_path, &mut out);
    }
    for paths in out.values_mut() {
        paths.sort();
    }
    out
}

#[derive(Clone, Debug)]
pub struct PathEntry {
    pub paths: Vec<Path>,
    /// True when no path fits the length bound and `paths` holds the single
    /// hop-shortest replacement path.
    pub fallback: bool,
}

/// Bounded-length paths per `(source, target)` pair, with a shortest-path
/// fallback for pairs that have none.
#[derive(Clone, Debug)]
pub struct PathTable {
    max_len: usize,
    entries: BTreeMap<(usize, usize), PathEntry>,
}

impl PathTable {
    pub fn for_source(net: &Network, src: usize, max_len: usize) -> Self {
        let mut table = PathTable {
            max_len,
            entries: BTreeMap::new(),
        };
        table.add_source(net, src);
        table
    }

    pub fn all_sources(net: &Network, max_len: usize) -> Self {
        let mut table = PathTable {
            max_len,
            entries: BTreeMap::new(),
        };
        for src in 0..net.node_count() {
            table.add_source(net, src);
        }
        table
    }

    fn add_source(&mut self, net: &Network, src: usize) {
        let mut found = enumerate_paths_from(net, src, self.max_len);
        for target in (0..net.node_count()).filter(|&t| t != src) {
            let entry = match found.remove(&target) {
                Some(paths) => PathEntry {
                    paths,
                    fallback: false,
                },
                None => PathEntry {
                    paths: vec![shortest_path_idx(net, None, src, target, Weight::Hop)
                        .expect("network is connected")],
                    fallback: true,
                },
            };
            self.entries.insert((src, target), entry);
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn get(&self, src: usize, target: usize) -> Option<&PathEntry> {
        self.entries.get(&(src, target))
    }

    /// Entries of one source, by target.
    pub fn from_source(&self, src: usize) -> impl Iterator<Item = (usize, &PathEntry)> {
        self.entries
            .range((src, 0)..=(src, usize::MAX))
            .map(|(&(_, t), e)| (t, e))
    }

    /// All paths of one source in table order.
    pub fn paths_from(&self, src: usize) -> Vec<Path> {
        self.from_source(src)
            .flat_map(|(_, e)| e.paths.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Hop,
    InverseKeyRate,
}

impl Weight {
    fn of(self, net: &Network, edge: usize) -> f64 {
        match self {
            Weight::Hop => 1.0,
            Weight::InverseKeyRate => 1.0 / net.edge(edge).key_rate,
        }
    }
}

/// Minimum-weight path; among equal weights the lexicographically smallest
/// node sequence wins.
pub fn shortest_path(net: &Network, u: &str, v: &str, weight: Weight) -> Result<Path, GraphError> {
    let (a, b) = (net.require_node(u)?, net.require_node(v)?);
    if a == b {
        return Err(GraphError::SameEndpoints(u.to_string()));
    }
    shortest_path_idx(net, None, a, b, weight)
        .ok_or_else(|| GraphError::Disconnected(v.to_string()))
}

/// Label-setting search keyed by `(distance, node sequence)`.
/// `within` restricts the search to a subset of edges.
pub fn shortest_path_idx(
    net: &Network,
    within: Option<&EdgeSet>,
    src: usize,
    dst: usize,
    weight: Weight,
) -> Option<Path> {
    let n = net.node_count();
    let mut label: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
    let mut settled = vec![false; n];
    label[src] = Some((0.0, vec![src]));
    loop {
        let current = (0..n)
            .filter(|&x| !settled[x] && label[x].is_some())
            .min_by(|&x, &y| {
                let (dx, px) = label[x].as_ref().unwrap();
                let (dy, py) = label[y].as_ref().unwrap();
                dx.total_cmp(dy).then_with(|| px.cmp(py))
            })?;
        settled[current] = true;
        let (dist, seq) = label[current].clone().unwrap();
        if current == dst {
            return Some(Path { nodes: seq });
        }
        for &(next, edge) in net.neighbors(current) {
            if settled[next] || within.is_some_and(|s| !s.contains(edge)) {
                continue;
            }
            let cand = dist + weight.of(net, edge);
            let better = match &label[next] {
                None => true,
                Some((d, p)) => match cand.total_cmp(d) {
                    Ordering::Less => true,
                    Ordering::Equal => {
                        let mut q = seq.clone();
                        q.push(next);
                        q < *p
                    }
                    Ordering::Greater => false,
                },
            };
            if better {
                let mut q = seq.clone();
                q.push(next);
                label[next] = Some((cand, q));
            }
        }
    }
}

/// Proper prefixes of `p` from the same source, shortest first.
pub fn prefix_subpaths(p: &Path) -> Vec<Path> {
    (2..p.nodes.len())
        .map(|k| Path {
            nodes: p.nodes[..k].to_vec(),
        })
        .collect()
}

/// Adjacency list restricted to an edge subset.
pub struct SubgraphAdjacency {
    adj: Vec<Vec<(usize, usize)>>,
}

impl SubgraphAdjacency {
    pub fn new(net: &Network, edges: &EdgeSet) -> Self {
        let mut adj = vec![Vec::new(); net.node_count()];
        for e in edges.iter() {
            let edge = net.edge(e);
            adj[edge.u].push((edge.v, e));
            adj[edge.v].push((edge.u, e));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        SubgraphAdjacency { adj }
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adj[node]
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// BFS tree from `src`, skipping `skip_edge`. Neighbors are visited in
    /// ascending order, so each parent chain is the lexicographically smallest
    /// hop-shortest path. Returns `(parent node, parent edge)` per node.
    pub fn bfs_tree(&self, src: usize, skip_edge: Option<usize>) -> Vec<Option<(usize, usize)>> {
        let n = self.adj.len();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut queue = VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &self.adj[x] {
                if Some(e) == skip_edge || seen[y] {
                    continue;
                }
                seen[y] = true;
                parent[y] = Some((x, e));
                queue.push_back(y);
            }
        }
        parent
    }

    /// Component label per node, ignoring `skip_edge`.
    pub fn components(&self, skip_edge: Option<usize>) -> Vec<usize> {
        let n = self.adj.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for &(y, e) in &self.adj[x] {
                    if Some(e) != skip_edge && comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Whether every node in `nodes` lies in one component.
    pub fn connects(&self, nodes: &[usize], skip_edge: Option<usize>) -> bool {
        let Some(&first) = nodes.first() else {
            return true;
        };
        let comp = self.components(skip_edge);
        nodes.iter().all(|&x| comp[x] == comp[first])
    }
}

/// Whether `edges` connects every node of the network.
pub fn is_connected(net: &Network, edges: &EdgeSet) -> bool {
    let all: Vec<usize> = (0..net.node_count()).collect();
    SubgraphAdjacency::new(net, edges).connects(&all, None)
}

#[derive(Clone, Copy, Debug)]
pub enum MstWeight<'a> {
    InverseKeyRate,
    /// Cost per edge index.
    Custom(&'a [f64]),
}

/// Kruskal; ties are broken by canonical edge order.
pub fn minimum_spanning_tree(net: &Network, weight: MstWeight<'_>) -> EdgeSet {
    let w = |e: usize| match weight {
        MstWeight::InverseKeyRate => 1.0 / net.edge(e).key_rate,
        MstWeight::Custom(costs) => costs[e],
    };
    let mut order: Vec<usize> = (0..net.edge_count()).collect();
    order.sort_by(|&a, &b| w(a).total_cmp(&w(b)).then(a.cmp(&b)));
    let mut dsu = DisjointSets::new(net.node_count());
    order
        .into_iter()
        .filter(|&e| dsu.union(net.edge(e).u, net.edge(e).v))
        .collect()
}

/// Union-find with path halving.
pub struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
    sets: usize,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Nodes touched by `edges`, ascending.
pub fn incident_nodes(net: &Network, edges: &EdgeSet) -> Vec<usize> {
    let mut seen = vec![false; net.node_count()];
    for e in edges.iter() {
        seen[net.edge(e).u] = true;
        seen[net.edge(e).v] = true;
    }
    (0..net.node_count()).filter(|&v| seen[v]).collect()
}

/// Bridges of the graph formed by `edges` over its incident nodes, found with
/// an iterative lowlink DFS.
pub fn find_bridges(net: &Network, edges: &EdgeSet) -> Result<EdgeSet, GraphError> {
    let nodes = incident_nodes(net, edges);
    let adj = SubgraphAdjacency::new(net, edges);
    if !adj.connects(&nodes, None) {
        let comp = adj.components(None);
        let stray = nodes.iter().find(|&&x| comp[x] != comp[nodes[0]]).unwrap();
        return Err(GraphError::Disconnected(net.id(*stray).0.clone()));
    }
    Ok(bridges_of(&adj, &nodes))
}

fn bridges_of(adj: &SubgraphAdjacency, nodes: &[usize]) -> EdgeSet {
    let n = adj.node_count();
    let mut bridges = EdgeSet::new();
    let Some(&root) = nodes.first() else {
        return bridges;
    };
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut clock = 0;
    // (node, edge used to enter it, next neighbor position)
    let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
    disc[root] = clock;
    low[root] = clock;
    clock += 1;
    while let Some(top) = stack.last_mut() {
        let (x, via, pos) = *top;
        if let Some(&(y, e)) = adj.neighbors(x).get(pos) {
            top.2 += 1;
            if Some(e) == via {
                continue;
            }
            if disc[y] == usize::MAX {
                disc[y] = clock;
                low[y] = clock;
                clock += 1;
                stack.push((y, Some(e), 0));
            } else {
                low[x] = low[x].min(disc[y]);
            }
        } else {
            stack.pop();
            if let (Some(&(parent, _, _)), Some(e)) = (stack.last(), via) {
                low[parent] = low[parent].min(low[x]);
                if low[x] > disc[parent] {
                    bridges.insert(e);
                }
            }
        }
    }
    bridges
}

/// True iff `edges` connects all `nodes` and has no bridge.
pub fn is_two_edge_connected_on(net: &Network, edges: &EdgeSet, nodes: &[usize]) -> bool {
    let adj = SubgraphAdjacency::new(net, edges);
    if !adj.connects(nodes, None) {
        return false;
    }
    let touched = incident_nodes(net, edges);
    bridges_of(&adj, &touched).is_empty()
}

/// [`is_two_edge_connected_on`] over every node of the network.
pub fn is_two_edge_connected(net: &Network, edges: &EdgeSet) -> bool {
    let all: Vec<usize> = (0..net.node_count()).collect();
    is_two_edge_connected_on(net, edges, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkBuilder;

    fn triangle() -> Network {
        NetworkBuilder::new()
            .edge("a", "b", 10.0)
            .edge("b", "c", 5.0)
            .edge("a", "c", 2.0)
            .build()
            .unwrap()
    }

    fn path4() -> Network {
        NetworkBuilder::new()
            .edge("a", "b", 1.0)
            .edge("b", "c", 1.0)
            .edge("c", "d", 1.0)
            .build()
            .unwrap()
    }

    fn cycle4_with_pendant() -> Network {
        NetworkBuilder::new()
            .edge("a", "b", 1.0)
            .edge("b", "c", 1.0)
            .edge("c", "d", 1.0)
            .edge("d", "a", 1.0)
            .edge("d", "e", 1.0)
            .build()
            .unwrap()
    }

    fn labels(net: &Network, paths: &[Path]) -> Vec<String> {
        paths.iter().map(|p| p.label(net)).collect()
    }

    #[test]
    fn triangle_paths() {
        let net = triangle();
        let c = net.node_index("c").unwrap();
        let paths = enumerate_paths(&net, "a", 2).unwrap();
        assert_eq!(labels(&net, &paths[&c]), vec!["a-c", "a-b-c"]);
        let paths = enumerate_paths(&net, "a", 1).unwrap();
        assert_eq!(labels(&net, &paths[&c]), vec!["a-c"]);
        assert!(enumerate_paths(&net, "z", 1).is_err());
    }

    #[test]
    fn bounded_paths_need_fallback() {
        let net = path4();
        let d = net.node_index("d").unwrap();
        let paths = enumerate_paths(&net, "a", 2).unwrap();
        assert!(!paths.contains_key(&d));
        let table = PathTable::for_source(&net, 0, 2);
        let entry = table.get(0, d).unwrap();
        assert!(entry.fallback);
        assert_eq!(labels(&net, &entry.paths), vec!["a-b-c-d"]);
        assert!(!table.get(0, 1).unwrap().fallback);
    }

    #[test]
    fn shortest_paths() {
        let net = path4();
        assert_eq!(
            shortest_path(&net, "a", "d", Weight::Hop).unwrap().label(&net),
            "a-b-c-d"
        );
        let net = triangle();
        // 1/2 = 0.5 > 1/10 + 1/5 = 0.3
        assert_eq!(
            shortest_path(&net, "a", "c", Weight::InverseKeyRate)
                .unwrap()
                .label(&net),
            "a-b-c"
        );
        assert_eq!(
            shortest_path(&net, "a", "c", Weight::Hop).unwrap().label(&net),
            "a-c"
        );
    }

    #[test]
    fn hop_ties_break_lexicographically() {
        let net = NetworkBuilder::new()
            .edge("a", "c", 1.0)
            .edge("a", "b", 1.0)
            .edge("b", "d", 1.0)
            .edge("c", "d", 1.0)
            .build()
            .unwrap();
        assert_eq!(
            shortest_path(&net, "a", "d", Weight::Hop).unwrap().label(&net),
            "a-b-d"
        );
    }

    #[test]
    fn prefixes() {
        let net = path4();
        let p = Path::from_ids(&net, &["a", "b", "c", "d"]).unwrap();
        assert_eq!(labels(&net, &prefix_subpaths(&p)), vec!["a-b", "a-b-c"]);
        let p = Path::from_ids(&net, &["a", "b"]).unwrap();
        assert!(prefix_subpaths(&p).is_empty());
        let p = Path::from_ids(&net, &["a", "b", "c"]).unwrap();
        assert_eq!(labels(&net, &prefix_subpaths(&p)), vec!["a-b"]);
    }

    #[test]
    fn mst_cases() {
        let net = triangle();
        let (ab, ac, bc) = (0, 1, 2);
        let costs = [1.0, 3.0, 2.0];
        let mst = minimum_spanning_tree(&net, MstWeight::Custom(&costs));
        assert_eq!(mst, [ab, bc].into_iter().collect());
        let mst = minimum_spanning_tree(&net, MstWeight::Custom(&[1.0, 1.0, 1.0]));
        assert_eq!(mst, [ab, ac].into_iter().collect());
        let star = NetworkBuilder::new()
            .edge("h", "a", 1.0)
            .edge("h", "b", 2.0)
            .edge("h", "c", 3.0)
            .build()
            .unwrap();
        assert_eq!(
            minimum_spanning_tree(&star, MstWeight::InverseKeyRate),
            EdgeSet::full(&star)
        );
    }

    #[test]
    fn bridge_cases() {
        let net = NetworkBuilder::new()
            .edge("a", "b", 1.0)
            .edge("b", "c", 1.0)
            .build()
            .unwrap();
        assert_eq!(
            find_bridges(&net, &EdgeSet::full(&net)).unwrap(),
            EdgeSet::full(&net)
        );
        let net = cycle4_with_pendant();
        let de = EdgeSet::from_pairs(&net, &[("d", "e")]).unwrap();
        assert_eq!(find_bridges(&net, &EdgeSet::full(&net)).unwrap(), de);
        let cycle = EdgeSet::full(&net).symmetric_difference(&de);
        assert!(find_bridges(&net, &cycle).unwrap().is_empty());
        let broken = EdgeSet::from_pairs(&net, &[("a", "b"), ("c", "d")]).unwrap();
        assert!(matches!(
            find_bridges(&net, &broken),
            Err(GraphError::Disconnected(_))
        ));
    }

    #[test]
    fn two_edge_connectivity() {
        let net = cycle4_with_pendant();
        let de = EdgeSet::from_pairs(&net, &[("d", "e")]).unwrap();
        let cycle = EdgeSet::full(&net).symmetric_difference(&de);
        let cycle_nodes: Vec<usize> = (0..4).collect();
        assert!(is_two_edge_connected_on(&net, &cycle, &cycle_nodes));
        assert!(!is_two_edge_connected(&net, &cycle));
        assert!(!is_two_edge_connected(&net, &EdgeSet::full(&net)));

        let bowtie = NetworkBuilder::new()
            .edge("a", "b", 1.0)
            .edge("b", "c", 1.0)
            .edge("a", "c", 1.0)
            .edge("c", "d", 1.0)
            .edge("d", "e", 1.0)
            .edge("c", "e", 1.0)
            .build()
            .unwrap();
        assert!(is_two_edge_connected(&bowtie, &EdgeSet::full(&bowtie)));
        let tree = path4();
        assert!(!is_two_edge_connected(&tree, &EdgeSet::full(&tree)));
    }
}
