//! Range-limited connectivity graph and all-pairs shortest-path distances.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::f64_17;
use crate::topology::Deployment;

/// How edge lengths are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceMode {
    /// Exact Euclidean distance between neighbours.
    TrueRange,
    /// Connectivity only: every edge has length 1.
    HopCount,
}

impl DistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::TrueRange => "true_range",
            DistanceMode::HopCount => "hop_count",
        }
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true_range" | "true-range" | "range" => Ok(DistanceMode::TrueRange),
            "hop_count" | "hop-count" | "hop" => Ok(DistanceMode::HopCount),
            other => Err(Error::InvalidArgument(format!("unknown distance mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub d: f64,
}

/// Undirected graph over the nodes of a deployment. Edges are sorted by
/// `(i, j)` with `i < j`.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    n: usize,
    radio_range: f64,
    edges: Vec<Edge>,
    anchors: Vec<usize>,
    mode: DistanceMode,
}

/// An edge between an anchor and an unknown node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorEdge {
    pub anchor: usize,
    pub unknown: usize,
    pub d: f64,
}

/// Connects every pair of nodes at Euclidean distance `<= radio_range`.
pub fn build_graph(deployment: &Deployment, radio_range: f64, mode: DistanceMode) -> Result<NetworkGraph> {
    if !(radio_range > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radio range must be > 0, got {radio_range}"
        )));
    }
    let pos = deployment.positions();
    let mut edges = Vec::new();
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let d = pos[i].dist(pos[j]);
            if d <= radio_range {
                let d = match mode {
                    DistanceMode::TrueRange => d,
                    DistanceMode::HopCount => 1.0,
                };
                edges.push(Edge { i, j, d });
            }
        }
    }
    Ok(NetworkGraph {
        n: pos.len(),
        radio_range,
        edges,
        anchors: deployment.anchors().to_vec(),
        mode,
    })
}

impl NetworkGraph {
    /// Assembles a graph from an explicit edge list. Edges are normalized to
    /// `i < j` and sorted; self-loops, duplicates and out-of-range endpoints
    /// are rejected.
    pub fn from_edges(
        n: usize,
        radio_range: f64,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        anchors: Vec<usize>,
        mode: DistanceMode,
    ) -> Result<Self> {
        let mut list: Vec<Edge> = Vec::new();
        for (a, b, d) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b}) for {n} nodes")));
            }
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad edge length {d}")));
            }
            list.push(Edge {
                i: a.min(b),
                j: a.max(b),
                d,
            });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if list.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidArgument("duplicate edge".into()));
        }
        let mut anchors = anchors;
        anchors.sort_unstable();
        anchors.dedup();
        if anchors.last().is_some_and(|&a| a >= n) {
            return Err(Error::InvalidArgument("anchor index out of range".into()));
        }
        Ok(Self {
            n,
            radio_range,
            edges: list,
            anchors,
            mode,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn is_anchor(&self, i: usize) -> bool {
        self.anchors.binary_search(&i).is_ok()
    }

    /// Edges with exactly one anchor endpoint.
    pub fn anchor_edges(&self) -> Vec<AnchorEdge> {
        self.edges
            .iter()
            .filter_map(|e| match (self.is_anchor(e.i), self.is_anchor(e.j)) {
                (true, false) => Some(AnchorEdge {
                    anchor: e.i,
                    unknown: e.j,
                    d: e.d,
                }),
                (false, true) => Some(AnchorEdge {
                    anchor: e.j,
                    unknown: e.i,
                    d: e.d,
                }),
                _ => None,
            })
            .collect()
    }

    /// Edges between two unknown nodes.
    pub fn unknown_edges(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| !self.is_anchor(e.i) && !self.is_anchor(e.j))
            .copied()
            .collect()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push((e.j, e.d));
            adj[e.j].push((e.i, e.d));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Average number of neighbours per node. Anchor-anchor links count.
    pub fn avg_connectivity(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Returns the first node not reachable from node 0, if any.
    fn first_unreachable(&self) -> Option<usize> {
        if self.n == 0 {
            return None;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    pub fn is_connected(&self) -> bool {
        self.first_unreachable().is_none()
    }

    /// All-pairs shortest path lengths by one Dijkstra run per source.
    pub fn shortest_paths(&self) -> Result<DistanceMatrix> {
        if let Some(to) = self.first_unreachable() {
            return Err(Error::GraphDisconnected { from: 0, to });
        }
        let adj = self.adjacency();
        let rows: Vec<Vec<f64>> = (0..self.n)
            .into_par_iter()
            .map(|s| dijkstra(&adj, s))
            .collect();
        let mut m = DistanceMatrix::zeros(self.n);
        for (i, row) in rows.iter().enumerate() {
            for j in (i + 1)..self.n {
                // Both runs agree up to rounding; keep one so symmetry is exact.
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: source });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapEntry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Dense symmetric `n × n` matrix of nonnegative lengths with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    /// Builds a matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative length"
                    )));
                }
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Exact pairwise Euclidean distances between the deployment's nodes.
    pub fn euclidean(deployment: &Deployment) -> Self {
        let p = deployment.positions();
        Self::from_fn(p.len(), |i, j| p[i].dist(p[j])).expect("finite positions")
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
        self.entries[j * self.n + i] = v;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Element-wise square.
    pub fn squared(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| v * v).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|&v| f64_17(v)).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}
