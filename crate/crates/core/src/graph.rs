//! Undirected network topologies for the agent population.
//!
//! All generators are deterministic given their random stream and keep three
//! invariants: no self-loops, no duplicate edges, symmetric adjacency.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::round_half_up;

pub type NodeId = usize;

/// Simple undirected graph over nodes `0..n`.
///
/// Edges are stored both as adjacency lists (iteration) and as a normalized
/// edge list in insertion order (sampling, rewiring). The hash set only backs
/// membership tests, never ordered iteration.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<(NodeId, NodeId)>,
    edge_set: HashSet<(NodeId, NodeId)>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency && self.edges == other.edges
    }
}

fn norm(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Graph {
    pub fn empty(node_count: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); node_count],
            edges: Vec::new(),
            edge_set: HashSet::new(),
        }
    }

    /// Build a graph from an explicit edge list, rejecting self-loops and
    /// duplicates.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut g = Graph::empty(node_count);
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) outside node range 0..{node_count}"
                )));
            }
            if !g.add_edge(a, b) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) is a self-loop or duplicate"
                )));
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edge_set.contains(&norm(a, b))
    }

    /// Insert edge `{a, b}`; returns false (graph unchanged) on a self-loop
    /// or duplicate.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        if a == b || self.has_edge(a, b) {
            return false;
        }
        self.edges.push(norm(a, b));
        self.edge_set.insert(norm(a, b));
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
        true
    }

    /// Remove edge `{a, b}` if present.
    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        if !self.edge_set.remove(&norm(a, b)) {
            return false;
        }
        let idx = self.edges.iter().position(|&e| e == norm(a, b)).unwrap();
        self.edges.swap_remove(idx);
        self.detach(a, b);
        self.detach(b, a);
        true
    }

    /// Swap the edge stored at `idx` for `{a, b}`, keeping edge positions
    /// stable so an index sample taken before a rewiring pass stays valid.
    pub(crate) fn replace_edge_at(&mut self, idx: usize, a: NodeId, b: NodeId) {
        let (oa, ob) = self.edges[idx];
        debug_assert!(a != b && !self.has_edge(a, b));
        self.edge_set.remove(&(oa, ob));
        self.detach(oa, ob);
        self.detach(ob, oa);
        self.edges[idx] = norm(a, b);
        self.edge_set.insert(norm(a, b));
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
    }

    fn detach(&mut self, from: NodeId, neighbor: NodeId) {
        let pos = self.adjacency[from]
            .iter()
            .position(|&x| x == neighbor)
            .unwrap();
        self.adjacency[from].swap_remove(pos);
    }
}

/// G(n, M) Erdős–Rényi graph with exactly `round(n * k / 2)` edges, so the
/// edge total is deterministic for a requested average degree `k`.
pub fn gen_erdos_renyi(n: usize, k: f64, rng: &mut impl Rng) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if !(0.0..=(n - 1) as f64).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "average degree {k} outside [0, {}]",
            n - 1
        )));
    }
    let target = round_half_up(n as f64 * k / 2.0);
    let mut g = Graph::empty(n);
    while g.edge_count() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        g.add_edge(a, b);
    }
    Ok(g)
}

/// Watts–Strogatz small world: ring lattice of even degree `k`, then each
/// clockwise lattice edge is rewired with probability `rewire_prob` to a
/// uniform non-neighbor, preserving the edge count.
pub fn gen_small_world(n: usize, k: usize, rewire_prob: f64, rng: &mut impl Rng) -> Result<Graph> {
    if k % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "ring lattice degree must be even, got {k}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "lattice degree {k} must be below node count {n}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(Error::InvalidParameter(format!(
            "rewire probability {rewire_prob} outside [0, 1]"
        )));
    }
    let mut g = Graph::empty(n);
    for i in 0..n {
        for d in 1..=k / 2 {
            g.add_edge(i, (i + d) % n);
        }
    }
    for i in 0..n {
        for d in 1..=k / 2 {
            let j = (i + d) % n;
            if rng.gen::<f64>() >= rewire_prob {
                continue;
            }
            // Uniform target among nodes not adjacent to i (and not i);
            // if i already neighbors everyone the edge is left in place.
            let candidates = n - 1 - g.degree(i);
            if candidates == 0 {
                continue;
            }
            let mut pick = rng.gen_range(0..candidates);
            let mut target = None;
            for w in 0..n {
                if w == i || g.has_edge(i, w) {
                    continue;
                }
                if pick == 0 {
                    target = Some(w);
                    break;
                }
                pick -= 1;
            }
            let w = target.expect("candidate count matched scan");
            g.remove_edge(i, j);
            g.add_edge(i, w);
        }
    }
    Ok(g)
}

/// Barabási–Albert preferential attachment: an `m`-node seed clique, then
/// every arriving node attaches to `m` distinct existing nodes chosen with
/// probability proportional to degree.
pub fn gen_preferential_attachment(n: usize, m: usize, rng: &mut impl Rng) -> Result<Graph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!(
            "edges per new node must satisfy 1 <= m < n, got m={m}, n={n}"
        )));
    }
    let mut g = Graph::empty(n);
    // One entry per edge endpoint; sampling from it is degree-proportional.
    let mut endpoints: Vec<NodeId> = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            g.add_edge(a, b);
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    for v in m..n {
        let mut chosen: Vec<NodeId> = Vec::with_capacity(m);
        while chosen.len() < m {
            let candidate = if endpoints.is_empty() {
                rng.gen_range(0..v)
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            if !chosen.contains(&candidate) {
                chosen.push(candidate);
            }
        }
        for &u in &chosen {
            g.add_edge(v, u);
            endpoints.push(v);
            endpoints.push(u);
        }
    }
    Ok(g)
}
