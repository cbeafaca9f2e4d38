//! Builds the transition graph sequence of one series, prints per-snapshot
//! node statistics and the first snapshot as DOT.
//!
//! cargo run --example graph_stats

use evonet::graph::{
    build_graph_sequence, export, graph_stats, ExportFormat, Exportable, DEFAULT_DAMPING, DEFAULT_EPSILON,
    DEFAULT_TOLERANCE,
};
use evonet::io::{synth_generate, RunConfig, SynthConfig};
use evonet::pipeline::{fit_states, series_from_records};
use evonet::recognition::{recognition_weights, segment};

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn main() -> evonet::Result<()> {
    let data = synth_generate(&SynthConfig { num_series: 40, segments_per_series: 6, ..SynthConfig::default() }, 2)?;
    let series = series_from_records(&data.records, 8)?;
    let states = fit_states(&series, &RunConfig::default())?;
    let frame = recognition_weights(&segment(&series[0])?, &states)?;
    let graph = build_graph_sequence(&frame)?;

    let stats = graph_stats(&graph, DEFAULT_EPSILON, DEFAULT_DAMPING, DEFAULT_TOLERANCE)?;
    for s in &stats.snapshots {
        println!("t={} pagerank [{}] in-degree [{}] betweenness [{}]", s.t, fmt(&s.pagerank), fmt(&s.in_degree), fmt(&s.betweenness));
    }
    println!("{}", export(Exportable::Snapshot { t: 1, m: &graph.snapshots[0] }, ExportFormat::Dot, 0.05)?);
    Ok(())
}
