//! Centrality measures driving intervention targeting and the
//! most-influential-nodes observable.
//!
//! Scores are kept raw: every consumer selects by rank, so normalization
//! would be a no-op. Betweenness in particular stores unnormalized Brandes
//! accumulations. Rank selections break score ties by ascending node id,
//! which keeps every selection deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-8;
pub const PAGERANK_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centrality {
    Degree,
    Betweenness,
    Pagerank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub method: Centrality,
    pub scores: Vec<f64>,
}

/// Degree centrality: the adjacency-list length of each node.
pub fn degree(g: &Graph) -> CentralityScores {
    CentralityScores {
        method: Centrality::Degree,
        scores: (0..g.node_count()).map(|i| g.degree(i) as f64).collect(),
    }
}

/// Betweenness centrality via Brandes' algorithm on unweighted shortest
/// paths. Each unordered pair contributes once.
pub fn betweenness(g: &Graph) -> CentralityScores {
    let n = g.node_count();
    let mut scores = vec![0.0; n];
    let mut dist = vec![-1i64; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut order: Vec<NodeId> = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();

    for s in 0..n {
        for i in 0..n {
            dist[i] = -1;
            sigma[i] = 0.0;
            delta[i] = 0.0;
            preds[i].clear();
        }
        order.clear();
        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    // Each pair was visited from both endpoints.
    for x in &mut scores {
        *x /= 2.0;
    }
    CentralityScores {
        method: Centrality::Betweenness,
        scores,
    }
}

/// PageRank by power iteration on the symmetric adjacency, with isolated
/// nodes redistributing their mass uniformly. The result is a probability
/// distribution.
pub fn pagerank(g: &Graph, damping: f64, tol: f64, max_iter: usize) -> Result<CentralityScores> {
    if !(0.0 < damping && damping < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping {damping} outside (0, 1)"
        )));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(CentralityScores {
            method: Centrality::Pagerank,
            scores: Vec::new(),
        });
    }
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let dangling: f64 = (0..n)
            .filter(|&i| g.degree(i) == 0)
            .map(|i| rank[i])
            .sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        for x in &mut next {
            *x = base;
        }
        for v in 0..n {
            let deg = g.degree(v);
            if deg == 0 {
                continue;
            }
            let share = damping * rank[v] / deg as f64;
            for &w in g.neighbors(v) {
                next[w] += share;
            }
        }
        let diff: f64 = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut rank, &mut next);
        if diff < tol {
            break;
        }
    }
    Ok(CentralityScores {
        method: Centrality::Pagerank,
        scores: rank,
    })
}

/// Node ids ordered by descending score, ties by ascending id.
pub fn ranked_nodes(scores: &[f64]) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("centrality scores are finite")
            .then(a.cmp(&b))
    });
    ids
}
