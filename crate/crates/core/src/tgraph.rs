//! Temporal weighted multidigraph.
//!
//! Nodes are interned external identifiers (account addresses). Each edge is a
//! single transaction `(src, dst, weight, timestamp)`; parallel edges and
//! self-loops are kept. Per-node out-adjacency is kept sorted by
//! `(timestamp, edge id)` so a temporal neighborhood `N_t(u)` is a suffix of
//! that list, located by binary search.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Integer Unix seconds.
pub type Timestamp = i64;

/// Time floor that admits every edge.
pub const NEG_INFINITY: Timestamp = Timestamp::MIN;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalEdge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Transaction amount in Ether.
    pub weight: f64,
    pub timestamp: Timestamp,
    /// Identity of the transaction this edge was created from. Survives
    /// subgraph extraction so that splicing can tell a duplicated edge from a
    /// genuine parallel transaction.
    pub origin: u64,
}

/// Key identifying an edge independently of node indexing.
pub type EdgeKey = (String, String, u64, Timestamp, u64);

#[derive(Clone, Debug, Default)]
pub struct TemporalGraph {
    external_ids: Vec<String>,
    lookup: HashMap<String, NodeId>,
    edges: Vec<TemporalEdge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

/// Parameters of a directed K-order subgraph extraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphSpec {
    pub centers: Vec<String>,
    pub k_in: usize,
    pub k_out: usize,
}

impl SubgraphSpec {
    pub fn new(centers: Vec<String>, k_in: usize, k_out: usize) -> Self {
        Self { centers, k_in, k_out }
    }
}

impl TemporalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.external_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external_ids.is_empty()
    }

    /// Interns `external_id`, returning the existing index if already present.
    pub fn add_node(&mut self, external_id: &str) -> NodeId {
        if let Some(&id) = self.lookup.get(external_id) {
            return id;
        }
        let id = NodeId(self.external_ids.len());
        self.external_ids.push(external_id.to_owned());
        self.lookup.insert(external_id.to_owned(), id);
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        id
    }

    /// Adds one transaction edge. The edge's origin is its own id.
    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64, timestamp: Timestamp) -> Result<EdgeId> {
        let origin = self.edges.len() as u64;
        self.add_edge_with_origin(src, dst, weight, timestamp, origin)
    }

    pub fn add_edge_with_origin(
        &mut self,
        src: &str,
        dst: &str,
        weight: f64,
        timestamp: Timestamp,
        origin: u64,
    ) -> Result<EdgeId> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Validation(format!(
                "edge {src} -> {dst} has invalid weight {weight}"
            )));
        }
        let s = self.add_node(src);
        let d = self.add_node(dst);
        Ok(self.push_edge(s, d, weight, timestamp, origin))
    }

    fn push_edge(&mut self, src: NodeId, dst: NodeId, weight: f64, timestamp: Timestamp, origin: u64) -> EdgeId {
        let id = EdgeId(self.edges.len());
        self.edges.push(TemporalEdge {
            src,
            dst,
            weight,
            timestamp,
            origin,
        });
        // The new id is the largest, so it goes after every edge with an
        // equal or earlier timestamp.
        let edges = &self.edges;
        let adj = &mut self.out_adj[src.0];
        let pos = adj.partition_point(|e| edges[e.0].timestamp <= timestamp);
        adj.insert(pos, id);
        self.in_adj[dst.0].push(id);
        id
    }

    pub fn node(&self, external_id: &str) -> Option<NodeId> {
        self.lookup.get(external_id).copied()
    }

    pub fn require_node(&self, external_id: &str) -> Result<NodeId> {
        self.node(external_id)
            .ok_or_else(|| Error::UnknownNode(external_id.to_owned()))
    }

    pub fn external_id(&self, node: NodeId) -> &str {
        &self.external_ids[node.0]
    }

    pub fn external_ids(&self) -> &[String] {
        &self.external_ids
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.external_ids.len()).map(NodeId)
    }

    pub fn edge(&self, id: EdgeId) -> &TemporalEdge {
        &self.edges[id.0]
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    /// Out-edges of `node` sorted by `(timestamp, edge id)`.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_adj[node.0]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_adj[node.0]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_adj[node.0].len()
    }

    /// `N_t(u)`: out-edges of `node` with timestamp `>= t`, in ascending
    /// `(timestamp, id)` order. Panics if `node` is out of range.
    #[inline]
    pub fn neighborhood(&self, node: NodeId, t: Timestamp) -> &[EdgeId] {
        let adj = &self.out_adj[node.0];
        if t == NEG_INFINITY {
            return adj;
        }
        let start = adj.partition_point(|e| self.edges[e.0].timestamp < t);
        &adj[start..]
    }

    /// Checked variant of [`neighborhood`](Self::neighborhood).
    pub fn temporal_edge_neighborhood(&self, node: NodeId, t: Timestamp) -> Result<&[EdgeId]> {
        if node.0 >= self.node_count() {
            return Err(Error::UnknownNode(node.to_string()));
        }
        Ok(self.neighborhood(node, t))
    }

    fn bfs(&self, starts: &[NodeId], hops: usize, forward: bool, seen: &mut [bool]) {
        let mut depth = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        for &s in starts {
            if depth[s.0] == usize::MAX {
                depth[s.0] = 0;
                seen[s.0] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            if depth[u.0] == hops {
                continue;
            }
            let adj = if forward { &self.out_adj[u.0] } else { &self.in_adj[u.0] };
            for &e in adj {
                let edge = &self.edges[e.0];
                let v = if forward { edge.dst } else { edge.src };
                if depth[v.0] == usize::MAX {
                    depth[v.0] = depth[u.0] + 1;
                    seen[v.0] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Induced subgraph on the nodes within `k_out` hops downstream or `k_in`
    /// hops upstream of any center. The two expansions run independently from
    /// the centers.
    pub fn k_order_subgraph(&self, spec: &SubgraphSpec) -> Result<TemporalGraph> {
        if spec.centers.is_empty() {
            return Err(Error::Validation("subgraph spec has no centers".into()));
        }
        let centers = spec
            .centers
            .iter()
            .map(|c| self.require_node(c))
            .collect::<Result<Vec<_>>>()?;

        let mut keep = vec![false; self.node_count()];
        self.bfs(&centers, spec.k_out, true, &mut keep);
        self.bfs(&centers, spec.k_in, false, &mut keep);

        let mut sub = TemporalGraph::new();
        for node in self.nodes().filter(|n| keep[n.0]) {
            sub.add_node(self.external_id(node));
        }
        for edge in &self.edges {
            if keep[edge.src.0] && keep[edge.dst.0] {
                let s = sub.lookup[self.external_id(edge.src)];
                let d = sub.lookup[self.external_id(edge.dst)];
                sub.push_edge(s, d, edge.weight, edge.timestamp, edge.origin);
            }
        }
        Ok(sub)
    }

    /// Node-wise and edge-wise union keyed by external id. An edge present in
    /// several inputs (same endpoints, weight, timestamp and origin) is kept
    /// once.
    pub fn splice<'a>(subgraphs: impl IntoIterator<Item = &'a TemporalGraph>) -> TemporalGraph {
        let mut out = TemporalGraph::new();
        let mut seen: HashSet<(NodeId, NodeId, u64, Timestamp, u64)> = HashSet::new();
        for g in subgraphs {
            for id in g.external_ids() {
                out.add_node(id);
            }
            for edge in &g.edges {
                let s = out.lookup[g.external_id(edge.src)];
                let d = out.lookup[g.external_id(edge.dst)];
                if seen.insert((s, d, edge.weight.to_bits(), edge.timestamp, edge.origin)) {
                    out.push_edge(s, d, edge.weight, edge.timestamp, edge.origin);
                }
            }
        }
        out
    }

    /// Sorted edge keys; two graphs are equal up to re-indexing iff their
    /// node-id sets and edge multisets agree.
    pub fn edge_multiset(&self) -> Vec<EdgeKey> {
        let mut keys: Vec<EdgeKey> = self
            .edges
            .iter()
            .map(|e| {
                (
                    self.external_id(e.src).to_owned(),
                    self.external_id(e.dst).to_owned(),
                    e.weight.to_bits(),
                    e.timestamp,
                    e.origin,
                )
            })
            .collect();
        keys.sort();
        keys
    }

    pub fn node_set(&self) -> Vec<String> {
        let mut ids = self.external_ids.clone();
        ids.sort();
        ids
    }
}
