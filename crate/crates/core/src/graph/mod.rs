//! Evolutionary state graphs.
//!
//! `T` recognised segments yield `T - 1` snapshots. Snapshot `t` (1-based,
//! `t = 1..T-1`) holds the transition weights from segment `t - 1` to
//! segment `t`: `M[v][w] = p_{t-1}(v) * p_t(w)`. Every snapshot is therefore
//! the outer product of two recognition rows and has rank at most one.

mod export;
mod stats;

use std::ops::Range;

pub use export::{export, from_json, to_dot, ExportFormat, Exportable};
pub use stats::{centrality, graph_stats, in_degree, pagerank, Centrality, GraphStats, SnapshotStats};

use crate::error::{Error, Result};
use crate::recognition::RecognitionFrame;
use crate::tensor::Tensor;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct EvoStateGraph {
    pub num_states: usize,
    /// Dense `|V| x |V|` matrices; position `i` is snapshot `t = i + 1`.
    pub snapshots: Vec<Tensor>,
}

impl EvoStateGraph {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Outer product of consecutive recognition rows.
pub fn build_graph_sequence(frame: &RecognitionFrame) -> Result<EvoStateGraph> {
    let t_len = frame.num_segments();
    if t_len < 2 {
        return Err(Error::TooFewSegments(t_len));
    }
    let n = frame.num_states();
    let snapshots = (1..t_len)
        .map(|t| {
            let (prev, cur) = (frame.row(t - 1), frame.row(t));
            let mut data = Vec::with_capacity(n * n);
            for &a in prev {
                data.extend(cur.iter().map(|&b| a * b));
            }
            Tensor::from_parts(n, n, data)
        })
        .collect();
    Ok(EvoStateGraph { num_states: n, snapshots })
}

/// Stacks `M` over its transpose into a `2|V| x |V|` matrix.
pub fn in_out_adjacency(m: &Tensor) -> Result<Tensor> {
    if m.rows() != m.cols() {
        return Err(Error::shape("in_out_adjacency", format!("{}x{} is not square", m.rows(), m.cols())));
    }
    let mut data = m.data().to_vec();
    data.extend_from_slice(m.transpose().data());
    Ok(Tensor::from_parts(2 * m.rows(), m.cols(), data))
}

/// Elementwise mean of the snapshots at positions `range`.
pub fn aggregate_graph(graph: &EvoStateGraph, range: Range<usize>) -> Result<Tensor> {
    if range.is_empty() || range.end > graph.len() {
        return Err(Error::invalid(format!(
            "snapshot range {range:?} is empty or outside 0..{}",
            graph.len()
        )));
    }
    let count = range.len() as f64;
    let n = graph.num_states;
    let mut acc = Tensor::zeros(n, n);
    for s in &graph.snapshots[range] {
        acc.add_assign(s);
    }
    Ok(acc.map(|v| v / count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(rows: &[Vec<f64>]) -> RecognitionFrame {
        RecognitionFrame { weights: Tensor::from_rows(rows).unwrap() }
    }

    #[test]
    fn outer_product_examples() {
        let g = build_graph_sequence(&frame(&[vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert_eq!(g.snapshots[0].data(), &[0.0, 1.0, 0.0, 0.0]);
        let g = build_graph_sequence(&frame(&[vec![0.5, 0.5], vec![0.5, 0.5]])).unwrap();
        assert!(g.snapshots[0].data().iter().all(|&m| m == 0.25));
    }

    #[test]
    fn single_segment_is_rejected() {
        let err = build_graph_sequence(&frame(&[vec![1.0, 0.0]])).unwrap_err();
        assert!(err.to_string().contains("T < 2"));
    }

    #[test]
    fn one_hot_frames_give_single_unit_edges() {
        let states = [2usize, 0, 0, 1, 2];
        let rows: Vec<Vec<f64>> = states
            .iter()
            .map(|&s| (0..3).map(|v| if v == s { 1.0 } else { 0.0 }).collect())
            .collect();
        let g = build_graph_sequence(&frame(&rows)).unwrap();
        assert_eq!(g.len(), 4);
        for (i, snap) in g.snapshots.iter().enumerate() {
            let nonzero: Vec<usize> = (0..9).filter(|&k| snap.data()[k] != 0.0).collect();
            assert_eq!(nonzero, vec![states[i] * 3 + states[i + 1]]);
            assert_eq!(snap.sum(), 1.0);
        }
    }

    #[test]
    fn in_out_stacking() {
        let m = Tensor::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let s = in_out_adjacency(&m).unwrap();
        assert_eq!(s.shape(), [4, 2]);
        assert_eq!(&s.data()[4..], &[0.0, 0.0, 1.0, 0.0]);
        let sym = Tensor::from_rows(&[vec![0.2, 0.7], vec![0.7, 0.1]]).unwrap();
        let s = in_out_adjacency(&sym).unwrap();
        assert_eq!(&s.data()[..4], &s.data()[4..]);
        assert!(in_out_adjacency(&Tensor::zeros(2, 3)).is_err());
    }

    #[test]
    fn aggregation() {
        let m = Tensor::from_rows(&[vec![0.4, 0.2], vec![0.0, 1.0]]).unwrap();
        let g = EvoStateGraph { num_states: 2, snapshots: vec![m.clone(), Tensor::zeros(2, 2)] };
        assert_eq!(aggregate_graph(&g, 0..1).unwrap(), m);
        assert_eq!(aggregate_graph(&g, 0..2).unwrap(), m.map(|v| v / 2.0));
        assert!(aggregate_graph(&g, 1..1).is_err());
        assert!(aggregate_graph(&g, 1..3).is_err());
    }
}
