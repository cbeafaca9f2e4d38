//! Structural statistics of single snapshots.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::EvoStateGraph;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Weighted in-degree: column sums of `M`.
pub fn in_degree(m: &Tensor) -> Vec<f64> {
    let n = m.cols();
    let mut out = vec![0.0; n];
    for r in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row_slice(r)) {
            *o += v;
        }
    }
    out
}

/// PageRank by power iteration on the out-mass normalised graph.
///
/// Node `u` sends `M[u][v] / sum_w M[u][w]` of its score to `v`; nodes with
/// no out-mass spread their score uniformly.
pub fn pagerank(m: &Tensor, damping: f64, tol: f64) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::shape("pagerank", "adjacency must be square"));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::invalid(format!("damping must be in (0, 1), got {damping}")));
    }
    if m.data().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("pagerank needs non-negative weights"));
    }
    let n = m.rows();
    let out_mass: Vec<f64> = (0..n).map(|u| m.row_slice(u).iter().sum()).collect();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let dangling: f64 = (0..n).filter(|&u| out_mass[u] <= 0.0).map(|u| x[u]).sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for u in 0..n {
            if out_mass[u] <= 0.0 {
                continue;
            }
            let share = damping * x[u] / out_mass[u];
            for (nv, w) in next.iter_mut().zip(m.row_slice(u)) {
                *nv += share * w;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if change < tol {
            break;
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Centrality {
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Relative slack under which two path lengths count as equal.
const TIE: f64 = 1e-12;

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE * a.abs().max(b.abs())
}

/// Betweenness (Brandes, directed, unnormalised) and closeness on the graph
/// whose edges are the entries `m >= epsilon`, each of length `1 / m`.
///
/// Closeness of `v` is `(r - 1) / sum of distances` over the `r` nodes
/// reachable from `v` (itself included), and 0 when nothing is reachable.
pub fn centrality(m: &Tensor, epsilon: f64) -> Result<Centrality> {
    if m.rows() != m.cols() {
        return Err(Error::shape("centrality", "adjacency must be square"));
    }
    if epsilon.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let n = m.rows();
    let adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&v| v != u && m.get(u, v) >= epsilon)
                .map(|v| (v, 1.0 / m.get(u, v)))
                .collect()
        })
        .collect();

    let mut betweenness = vec![0.0; n];
    let mut closeness = vec![0.0; n];
    for s in 0..n {
        let mut dist = vec![f64::INFINITY; n];
        let mut sigma = vec![0.0_f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut settled = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        sigma[s] = 1.0;
        heap.push(Entry { dist: 0.0, node: s });
        while let Some(Entry { dist: d, node: u }) = heap.pop() {
            if settled[u] || d > dist[u] {
                continue;
            }
            settled[u] = true;
            order.push(u);
            for &(v, len) in &adj[u] {
                if settled[v] {
                    continue;
                }
                let alt = d + len;
                if dist[v].is_infinite() || (alt < dist[v] && !nearly_equal(alt, dist[v])) {
                    dist[v] = alt;
                    sigma[v] = sigma[u];
                    preds[v] = vec![u];
                    heap.push(Entry { dist: alt, node: v });
                } else if nearly_equal(alt, dist[v]) {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }

        let reachable = order.len();
        let total: f64 = order.iter().map(|&v| dist[v]).sum();
        closeness[s] = if reachable > 1 && total > 0.0 { (reachable - 1) as f64 / total } else { 0.0 };

        let mut delta = vec![0.0; n];
        for &w in order.iter().rev() {
            for &u in &preds[w] {
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                betweenness[w] += delta[w];
            }
        }
    }
    Ok(Centrality { betweenness, closeness })
}

/// All four statistics for one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotStats {
    pub t: usize,
    pub betweenness: Vec<f64>,
    pub closeness: Vec<f64>,
    pub pagerank: Vec<f64>,
    pub in_degree: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphStats {
    pub version: u32,
    pub snapshots: Vec<SnapshotStats>,
}

pub fn graph_stats(graph: &EvoStateGraph, epsilon: f64, damping: f64, tol: f64) -> Result<GraphStats> {
    let snapshots = graph
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let c = centrality(m, epsilon)?;
            Ok(SnapshotStats {
                t: i + 1,
                betweenness: c.betweenness,
                closeness: c.closeness,
                pagerank: pagerank(m, damping, tol)?,
                in_degree: in_degree(m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphStats { version: super::export::EXPORT_VERSION, snapshots })
}
