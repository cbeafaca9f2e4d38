//! DOT and JSON renderings of snapshots.

use std::fmt::Write as _;

use serde::Deserialize;

use super::EvoStateGraph;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const EXPORT_VERSION: u32 = 1;
const PENWIDTH_PER_UNIT: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::invalid(format!("unknown export format '{other}' (expected dot or json)"))),
        }
    }
}

/// What can be exported: a whole graph or one snapshot.
pub enum Exportable<'a> {
    Graph(&'a EvoStateGraph),
    Snapshot { t: usize, m: &'a Tensor },
}

pub fn export(item: Exportable<'_>, format: ExportFormat, threshold: f64) -> Result<String> {
    if threshold.partial_cmp(&0.0).is_none_or(|o| o == std::cmp::Ordering::Less) {
        return Err(Error::invalid("threshold must be >= 0"));
    }
    let snapshots: Vec<(usize, &Tensor)> = match &item {
        Exportable::Graph(g) => g.snapshots.iter().enumerate().map(|(i, m)| (i + 1, m)).collect(),
        Exportable::Snapshot { t, m } => vec![(*t, *m)],
    };
    let num_states = snapshots.first().map_or(0, |(_, m)| m.rows());
    match format {
        ExportFormat::Dot => Ok(snapshots
            .iter()
            .map(|&(t, m)| {
                let name = if snapshots.len() == 1 { "G".to_string() } else { format!("t{t}") };
                to_dot(&name, m, threshold)
            })
            .collect::<Vec<_>>()
            .join("\n")),
        ExportFormat::Json => Ok(to_json(num_states, &snapshots, threshold)),
    }
}

pub fn to_dot(name: &str, m: &Tensor, threshold: f64) -> String {
    let n = m.rows();
    let mut out = format!("digraph {name} {{\n");
    for v in 0..n {
        let _ = writeln!(out, "  s{v};");
    }
    for from in 0..n {
        for to in 0..n {
            let w = m.get(from, to);
            if w >= threshold && w > 0.0 {
                let _ = writeln!(
                    out,
                    "  s{from} -> s{to} [label=\"{w:.4}\", penwidth={:.4}];",
                    w * PENWIDTH_PER_UNIT
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_json(num_states: usize, snapshots: &[(usize, &Tensor)], threshold: f64) -> String {
    let mut out = format!("{{\n  \"version\": {EXPORT_VERSION},\n  \"num_states\": {num_states},\n  \"snapshots\": [");
    for (i, (t, m)) in snapshots.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}\n    {{\"t\": {t}, \"edges\": [");
        let mut first = true;
        for from in 0..m.rows() {
            for to in 0..m.cols() {
                let w = m.get(from, to);
                if w >= threshold {
                    let sep = if first { "" } else { ", " };
                    first = false;
                    let _ = write!(out, "{sep}{{\"from\": {from}, \"to\": {to}, \"w\": {}}}", num(w));
                }
            }
        }
        out.push_str("]}");
    }
    out.push_str("\n  ]\n}\n");
    out
}

#[derive(Deserialize)]
struct GraphDoc {
    version: u32,
    num_states: usize,
    snapshots: Vec<SnapshotDoc>,
}

#[derive(Deserialize)]
struct SnapshotDoc {
    #[allow(dead_code)]
    t: usize,
    edges: Vec<EdgeDoc>,
}

#[derive(Deserialize)]
struct EdgeDoc {
    from: usize,
    to: usize,
    w: f64,
}

/// Reads a JSON export back; edges absent from the document are zero.
pub fn from_json(text: &str) -> Result<EvoStateGraph> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    if doc.version != EXPORT_VERSION {
        return Err(Error::invalid(format!("unsupported graph export version {}", doc.version)));
    }
    let n = doc.num_states;
    if n == 0 {
        return Err(Error::invalid("graph export has no states"));
    }
    let snapshots = doc
        .snapshots
        .into_iter()
        .map(|s| {
            let mut data = vec![0.0; n * n];
            for e in s.edges {
                if e.from >= n || e.to >= n {
                    return Err(Error::invalid(format!("edge {} -> {} outside {n} states", e.from, e.to)));
                }
                data[e.from * n + e.to] = e.w;
            }
            Tensor::new(n, n, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvoStateGraph { num_states: n, snapshots })
}
