//! Fiber network model: nodes, key-rate edges and the traffic demand matrix.
//!
//! Node ids are strings ordered with a numeric-aware comparison ("2" < "10"),
//! and a [`Network`] stores its nodes sorted by that order. Every other module
//! refers to nodes and edges by their index into these sorted lists, so index
//! order and id order always agree.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("network has no nodes")]
    Empty,
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(NodeId, NodeId),
    #[error("nonpositive key rate {0}-{1}: {2}")]
    NonPositiveKeyRate(NodeId, NodeId, f64),
    #[error("negative demand {0}-{1}: {2}")]
    NegativeDemand(NodeId, NodeId, f64),
    #[error("asymmetric traffic {0}-{1}: {2} vs {3}")]
    AsymmetricTraffic(NodeId, NodeId, f64, f64),
    #[error("network is disconnected: node {0} unreachable from {1}")]
    Disconnected(NodeId, NodeId),
    #[error("edge {0}-{1} is not part of the network")]
    UnknownEdge(String, String),
    #[error("unknown format {0}")]
    UnknownFormat(String),
}

/// Node identifier with numeric-aware ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares strings chunk by chunk, digit runs by numeric value.
/// Falls back to plain byte order so that distinct strings never compare equal.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let bytes = s.as_bytes();
        let mut start = 0;
        while start < bytes.len() {
            let digit = bytes[start].is_ascii_digit();
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
                end += 1;
            }
            out.push((digit, &s[start..end]));
            start = end;
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, sa), (db, sb)) in ca.iter().zip(cb.iter()) {
        let ord = match (da, db) {
            (true, true) => {
                let ta = sa.trim_start_matches('0');
                let tb = sb.trim_start_matches('0');
                ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
            }
            _ => sa.cmp(sb),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub coords: Option<(f64, f64)>,
}

/// Undirected edge in canonical form: `u < v` as node indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// Key rate in kbit/s.
    pub key_rate: f64,
}

impl Edge {
    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected capacitated graph with a symmetric traffic demand matrix.
///
/// Immutable after construction; [`NetworkBuilder::build`] validates and
/// canonicalizes the input.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
    traffic: Vec<f64>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.traffic == other.traffic
    }
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn id(&self, idx: usize) -> &NodeId {
        &self.nodes[idx].id
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(&NodeId::from(id)).copied()
    }

    pub fn require_node(&self, id: &str) -> Result<usize, NetworkError> {
        self.node_index(id)
            .ok_or_else(|| NetworkError::UnknownNode(id.to_string()))
    }

    /// Index of the edge joining `a` and `b`, in either orientation.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_index.get(&key).copied()
    }

    /// `(neighbor, edge index)` pairs sorted by neighbor.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Demand between `a` and `b` in kbit/s of key material.
    pub fn demand(&self, a: usize, b: usize) -> f64 {
        self.traffic[a * self.nodes.len() + b]
    }

    /// Nonzero demands as `(a, b, demand)` with `a < b`.
    pub fn demands(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.nodes.len();
        (0..n).flat_map(move |a| {
            ((a + 1)..n).filter_map(move |b| {
                let d = self.traffic[a * n + b];
                (d > 0.0).then_some((a, b, d))
            })
        })
    }

    pub fn edge_label(&self, idx: usize) -> String {
        let e = &self.edges[idx];
        format!("{}-{}", self.nodes[e.u].id, self.nodes[e.v].id)
    }

    pub fn to_json_string(&self) -> String {
        let file = NetworkFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.0.clone(),
                    x: n.coords.map(|c| c.0),
                    y: n.coords.map(|c| c.1),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.nodes[e.u].id.0.clone(),
                    v: self.nodes[e.v].id.0.clone(),
                    key_rate_kbps: e.key_rate,
                })
                .collect(),
            traffic: self
                .demands()
                .map(|(a, b, d)| DemandRecord {
                    u: self.nodes[a].id.0.clone(),
                    v: self.nodes[b].id.0.clone(),
                    demand_kbps: d,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serialization")
    }

    pub fn from_json_str(text: &str) -> Result<Network, NetworkError> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
        let mut builder = NetworkBuilder::new();
        for n in file.nodes {
            let coords = match (n.x, n.y) {
                (Some(x), Some(y)) => Some((x, y)),
                (None, None) => None,
                _ => {
                    return Err(NetworkError::Parse(format!(
                        "node {} has only one coordinate",
                        n.id
                    )))
                }
            };
            builder = builder.node_at(n.id, coords);
        }
        for e in file.edges {
            builder = builder.edge(e.u, e.v, e.key_rate_kbps);
        }
        for d in file.traffic {
            builder = builder.demand(d.u, d.v, d.demand_kbps);
        }
        builder.build()
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    traffic: Vec<DemandRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    u: String,
    v: String,
    key_rate_kbps: f64,
}

#[derive(Serialize, Deserialize)]
struct DemandRecord {
    u: String,
    v: String,
    demand_kbps: f64,
}

/// Collects raw records and validates them into a [`Network`].
///
/// Nodes mentioned only by edges are created implicitly. A demand given in
/// one direction is mirrored; a demand given in both directions must agree.
#[derive(Default, Clone)]
pub struct NetworkBuilder {
    nodes: Vec<(String, Option<(f64, f64)>)>,
    edges: Vec<(String, String, f64)>,
    demands: Vec<(String, String, f64)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(self, id: impl Into<String>) -> Self {
        self.node_at(id, None)
    }

    pub fn node_at(mut self, id: impl Into<String>, coords: Option<(f64, f64)>) -> Self {
        self.nodes.push((id.into(), coords));
        self
    }

    pub fn edge(mut self, u: impl Into<String>, v: impl Into<String>, key_rate: f64) -> Self {
        self.edges.push((u.into(), v.into(), key_rate));
        self
    }

    pub fn demand(mut self, u: impl Into<String>, v: impl Into<String>, demand: f64) -> Self {
        self.demands.push((u.into(), v.into(), demand));
        self
    }

    /// Sets the same demand between every pair of nodes known so far.
    pub fn uniform_demand(mut self, demand: f64) -> Self {
        let mut ids: BTreeSet<NodeId> = self.nodes.iter().map(|n| NodeId(n.0.clone())).collect();
        for (u, v, _) in &self.edges {
            ids.insert(NodeId(u.clone()));
            ids.insert(NodeId(v.clone()));
        }
        let ids: Vec<_> = ids.into_iter().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                self.demands.push((a.0.clone(), b.0.clone(), demand));
            }
        }
        self
    }

    pub fn build(self) -> Result<Network, NetworkError> {
        let mut coords: HashMap<NodeId, Option<(f64, f64)>> = HashMap::new();
        let mut ids: BTreeSet<NodeId> = BTreeSet::new();
        for (id, c) in &self.nodes {
            let id = NodeId(id.clone());
            if !ids.insert(id.clone()) {
                return Err(NetworkError::DuplicateNode(id));
            }
            coords.insert(id, *c);
        }
        for (u, v, _) in &self.edges {
            ids.insert(NodeId(u.clone()));
            ids.insert(NodeId(v.clone()));
        }
        if ids.is_empty() {
            return Err(NetworkError::Empty);
        }
        let nodes: Vec<Node> = ids
            .into_iter()
            .map(|id| Node {
                coords: coords.get(&id).copied().flatten(),
                id,
            })
            .collect();
        let index: HashMap<NodeId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let lookup = |s: &str| {
            index
                .get(&NodeId::from(s))
                .copied()
                .ok_or_else(|| NetworkError::UnknownNode(s.to_string()))
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for (u, v, rate) in &self.edges {
            let (a, b) = (lookup(u)?, lookup(v)?);
            if a == b {
                return Err(NetworkError::SelfLoop(nodes[a].id.clone()));
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if !(*rate > 0.0) || !rate.is_finite() {
                return Err(NetworkError::NonPositiveKeyRate(
                    nodes[a].id.clone(),
                    nodes[b].id.clone(),
                    *rate,
                ));
            }
            edges.push(Edge {
                u: a,
                v: b,
                key_rate: *rate,
            });
        }
        edges.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        for w in edges.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                return Err(NetworkError::ParallelEdge(
                    nodes[w[0].u].id.clone(),
                    nodes[w[0].v].id.clone(),
                ));
            }
        }

        let n = nodes.len();
        let mut traffic = vec![0.0; n * n];
        let mut given = vec![false; n * n];
        for (u, v, d) in &self.demands {
            let (a, b) = (lookup(u)?, lookup(v)?);
            if !(*d >= 0.0) || !d.is_finite() {
                return Err(NetworkError::NegativeDemand(
                    nodes[a].id.clone(),
                    nodes[b].id.clone(),
                    *d,
                ));
            }
            if a == b {
                continue;
            }
            let (ab, ba) = (a * n + b, b * n + a);
            if given[ab] && traffic[ab] != *d {
                return Err(NetworkError::AsymmetricTraffic(
                    nodes[a].id.clone(),
                    nodes[b].id.clone(),
                    traffic[ab],
                    *d,
                ));
            }
            if given[ba] && traffic[ba] != *d {
                return Err(NetworkError::AsymmetricTraffic(
                    nodes[a].id.clone(),
                    nodes[b].id.clone(),
                    *d,
                    traffic[ba],
                ));
            }
            given[ab] = true;
            traffic[ab] = *d;
            traffic[ba] = *d;
        }

        let mut adjacency = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, i));
            adjacency[e.v].push((e.u, i));
            edge_index.insert((e.u, e.v), i);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        // connectivity
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected(
                nodes[missing].id.clone(),
                nodes[0].id.clone(),
            ));
        }

        Ok(Network {
            nodes,
            index,
            edges,
            edge_index,
            adjacency,
            traffic,
        })
    }
}

/// Subset of a network's edges, stored as edge indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSet(BTreeSet<usize>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn full(net: &Network) -> Self {
        EdgeSet((0..net.edge_count()).collect())
    }

    /// Builds a set from node-id pairs in either orientation.
    pub fn from_pairs<S: AsRef<str>>(net: &Network, pairs: &[(S, S)]) -> Result<Self, NetworkError> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            let edge = net
                .node_index(a)
                .zip(net.node_index(b))
                .and_then(|(x, y)| net.edge_between(x, y))
                .ok_or_else(|| NetworkError::UnknownEdge(a.to_string(), b.to_string()))?;
            set.insert(edge);
        }
        Ok(EdgeSet(set))
    }

    pub fn insert(&mut self, edge: usize) -> bool {
        self.0.insert(edge)
    }

    pub fn remove(&mut self, edge: usize) -> bool {
        self.0.remove(&edge)
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.0.contains(&edge)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn symmetric_difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.symmetric_difference(&other.0).copied().collect())
    }

    /// Canonical `(u, v)` id pairs in edge order.
    pub fn id_pairs(&self, net: &Network) -> Vec<(String, String)> {
        self.iter()
            .map(|i| {
                let e = net.edge(i);
                (net.id(e.u).0.clone(), net.id(e.v).0.clone())
            })
            .collect()
    }
}

impl FromIterator<usize> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        EdgeSet(iter.into_iter().collect())
    }
}

impl Extend<usize> for EdgeSet {
    fn extend<T: IntoIterator<Item = usize>>(&mut self, iter: T) {
        self.0.extend(iter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkFormat {
    Json,
    /// `u,v,key_rate` rows; demands are read from a sibling `<stem>.traffic.csv`
    /// (`u,v,demand` rows) when that file exists.
    CsvTriple,
}

impl NetworkFormat {
    pub fn from_path(path: &FsPath) -> NetworkFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => NetworkFormat::CsvTriple,
            _ => NetworkFormat::Json,
        }
    }
}

pub fn traffic_path_for(path: &FsPath) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("network");
    path.with_file_name(format!("{stem}.traffic.csv"))
}

pub fn load_network(path: &FsPath, format: NetworkFormat) -> Result<Network, NetworkError> {
    let read = |p: &FsPath| {
        fs::read_to_string(p).map_err(|source| NetworkError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    match format {
        NetworkFormat::Json => Network::from_json_str(&read(path)?),
        NetworkFormat::CsvTriple => {
            let traffic_path = traffic_path_for(path);
            let traffic = if traffic_path.exists() {
                Some(read(&traffic_path)?)
            } else {
                None
            };
            parse_csv_triple(&read(path)?, traffic.as_deref())
        }
    }
}

fn csv_rows(text: &str) -> Result<Vec<(String, String, f64)>, NetworkError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| NetworkError::Parse(e.to_string()))?;
        if record.len() < 3 {
            return Err(NetworkError::Parse(format!(
                "line {}: expected u,v,value",
                line + 1
            )));
        }
        let value = match record[2].parse::<f64>() {
            Ok(v) => v,
            // header row
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(NetworkError::Parse(format!(
                    "line {}: bad value {:?}: {e}",
                    line + 1,
                    &record[2]
                )))
            }
        };
        rows.push((record[0].to_string(), record[1].to_string(), value));
    }
    Ok(rows)
}

/// Parses csv-triple edge rows plus optional demand rows.
pub fn parse_csv_triple(edges: &str, traffic: Option<&str>) -> Result<Network, NetworkError> {
    let mut builder = NetworkBuilder::new();
    for (u, v, rate) in csv_rows(edges)? {
        builder = builder.edge(u, v, rate);
    }
    if let Some(traffic) = traffic {
        for (u, v, d) in csv_rows(traffic)? {
            builder = builder.demand(u, v, d);
        }
    }
    builder.build()
}

/// Writes `<stem>.csv` and `<stem>.traffic.csv` into `dir`.
pub fn write_csv_triple(net: &Network, dir: &FsPath, stem: &str) -> Result<PathBuf, NetworkError> {
    let io = |p: &FsPath, source| NetworkError::Io {
        path: p.to_path_buf(),
        source,
    };
    let edges_path = dir.join(format!("{stem}.csv"));
    let mut edges = String::from("u,v,key_rate\n");
    for e in net.edges() {
        edges.push_str(&format!("{},{},{}\n", net.id(e.u), net.id(e.v), e.key_rate));
    }
    fs::write(&edges_path, edges).map_err(|s| io(&edges_path, s))?;
    let traffic_path = traffic_path_for(&edges_path);
    let mut traffic = String::from("u,v,demand\n");
    for (a, b, d) in net.demands() {
        traffic.push_str(&format!("{},{},{}\n", net.id(a), net.id(b), d));
    }
    fs::write(&traffic_path, traffic).map_err(|s| io(&traffic_path, s))?;
    Ok(edges_path)
}

/// Hub node of [`reference_network`].
pub const REFERENCE_HUB: &str = "6";
pub const REFERENCE_NODES: usize = 29;
pub const REFERENCE_EDGES: usize = 48;
/// Uniform pairwise demand of the synthetic reference network, kbit/s.
pub const REFERENCE_DEMAND_KBPS: f64 = 0.002;
const REFERENCE_HUB_DEGREE: usize = 8;

/// Deterministic 29-node / 48-edge backbone-like network.
///
/// Nodes are labeled "1".."29" and scattered in the unit square with the hub
/// "6" in the center. The edge set is a Euclidean spanning tree, hub spokes,
/// bridge-closing links and then the shortest remaining links, with every
/// other node kept below the hub's degree. The result is connected and
/// 2-edge-connected. Key rates are uniform in [1, 20) kbit/s.
pub fn reference_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = REFERENCE_NODES;
    let hub = REFERENCE_HUB.parse::<usize>().unwrap() - 1;
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            if i == hub {
                (0.5, 0.5)
            } else {
                (rng.gen::<f64>(), rng.gen::<f64>())
            }
        })
        .collect();
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
        (dx * dx + dy * dy).sqrt()
    };

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let add = |edges: &mut BTreeSet<(usize, usize)>, a: usize, b: usize| {
        edges.insert((a.min(b), a.max(b)));
    };

    // Prim over the complete Euclidean graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    in_tree[hub] = true;
    for v in 0..n {
        if v != hub {
            best[v] = (dist(hub, v), hub);
        }
    }
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .unwrap();
        in_tree[v] = true;
        add(&mut edges, v, best[v].1);
        for w in 0..n {
            if !in_tree[w] && dist(v, w) < best[w].0 {
                best[w] = (dist(v, w), v);
            }
        }
    }

    let mut by_distance: Vec<usize> = (0..n).filter(|&v| v != hub).collect();
    by_distance.sort_by(|&a, &b| dist(hub, a).total_cmp(&dist(hub, b)));
    for &v in &by_distance {
        if degree_of(&edges, hub) >= REFERENCE_HUB_DEGREE {
            break;
        }
        add(&mut edges, hub, v);
    }

    let cap = REFERENCE_HUB_DEGREE - 1;
    let allowed = |edges: &BTreeSet<(usize, usize)>, a: usize, b: usize| {
        a != b
            && !edges.contains(&(a.min(b), a.max(b)))
            && a != hub
            && b != hub
            && degree_of(edges, a) < cap
            && degree_of(edges, b) < cap
    };

    // Close bridges with the shortest crossing link.
    loop {
        let Some((a, b)) = first_bridge(n, &edges) else {
            break;
        };
        let side = component_without(n, &edges, (a, b), a);
        let mut best_link: Option<(f64, usize, usize)> = None;
        for x in (0..n).filter(|&x| side[x]) {
            for y in (0..n).filter(|&y| !side[y]) {
                if allowed(&edges, x, y) {
                    let d = dist(x, y);
                    if best_link.map_or(true, |(bd, _, _)| d < bd) {
                        best_link = Some((d, x, y));
                    }
                }
            }
        }
        match best_link {
            Some((_, x, y)) => add(&mut edges, x, y),
            None => break,
        }
    }

    // Over budget: drop the longest links that leave no bridge behind.
    let mut by_length: Vec<(usize, usize)> = edges.iter().copied().filter(|&(a, b)| a != hub && b != hub).collect();
    by_length.sort_by(|x, y| dist(y.0, y.1).total_cmp(&dist(x.0, x.1)));
    for e in by_length {
        if edges.len() <= REFERENCE_EDGES {
            break;
        }
        edges.remove(&e);
        if first_bridge(n, &edges).is_some() {
            edges.insert(e);
        }
    }

    let mut candidates: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .map(|(a, b)| (dist(a, b), a, b))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (_, a, b) in candidates {
        if edges.len() >= REFERENCE_EDGES {
            break;
        }
        if allowed(&edges, a, b) {
            add(&mut edges, a, b);
        }
    }

    let mut edge_list: Vec<(usize, usize)> = edges.into_iter().collect();
    // Shuffle before drawing rates so that rates do not correlate with id order.
    edge_list.shuffle(&mut rng);
    let mut builder = NetworkBuilder::new();
    for (i, p) in pos.iter().enumerate() {
        builder = builder.node_at((i + 1).to_string(), Some(*p));
    }
    for (a, b) in edge_list {
        let rate = rng.gen_range(1.0..20.0);
        let rate = ((rate * 100.0_f64).round() / 100.0).min(19.99);
        builder = builder.edge((a + 1).to_string(), (b + 1).to_string(), rate);
    }
    builder
        .uniform_demand(REFERENCE_DEMAND_KBPS)
        .build()
        .expect("reference network is valid by construction")
}

fn degree_of(edges: &BTreeSet<(usize, usize)>, v: usize) -> usize {
    edges.iter().filter(|&&(a, b)| a == v || b == v).count()
}

fn component_without(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
    skip: (usize, usize),
    start: usize,
) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &(a, b) in edges {
            if (a, b) == skip {
                continue;
            }
            let y = if a == x {
                b
            } else if b == x {
                a
            } else {
                continue;
            };
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

fn first_bridge(n: usize, edges: &BTreeSet<(usize, usize)>) -> Option<(usize, usize)> {
    edges
        .iter()
        .copied()
        .find(|&(a, b)| !component_without(n, edges, (a, b), a)[b])
}
