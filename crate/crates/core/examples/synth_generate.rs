//! Generates a labelled synthetic data set, writes it as CSV with the latent
//! sidecar, and compares the event rate with the stationary expectation.
//!
//! cargo run --example synth_generate -- /tmp/synth.csv

use std::path::PathBuf;

use evonet::io::{stationary_distribution, synth_generate, SynthConfig};

fn main() -> evonet::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("evonet-synth.csv"), PathBuf::from);
    let config = SynthConfig { num_series: 200, ..SynthConfig::default() };
    let data = synth_generate(&config, 0)?;
    data.save(&out)?;

    let [a, b] = config.trigger;
    let p = config.transition_matrix();
    let expected = stationary_distribution(&p)[a] * p[a][b];
    let ends: Vec<u8> = data
        .records
        .iter()
        .flat_map(|r| r.labels.as_ref().map_or(Vec::new(), |l| l.chunks(config.tau).map(|c| c[c.len() - 1]).collect()))
        .collect();
    let rate = ends.iter().map(|&l| f64::from(l)).sum::<f64>() / ends.len() as f64;
    println!("wrote {} series to {}", data.records.len(), out.display());
    println!("segment event rate {rate:.4}, stationary expectation {expected:.4}");
    Ok(())
}
