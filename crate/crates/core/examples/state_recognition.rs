//! Learns states with each recognizer and prints the recognition weights of
//! the first series.
//!
//! cargo run --example state_recognition

use evonet::io::{synth_generate, RunConfig, SynthConfig};
use evonet::pipeline::{fit_states, series_from_records};
use evonet::recognition::{recognition_weights, segment, RecognizerKind};

fn main() -> evonet::Result<()> {
    let data = synth_generate(&SynthConfig { num_series: 60, segments_per_series: 8, ..SynthConfig::default() }, 1)?;
    let series = series_from_records(&data.records, 8)?;
    let segments = segment(&series[0])?;
    println!("latent states of {}: {:?}", series[0].id, data.sidecar.latent[0]);
    for kind in [RecognizerKind::Kmeans, RecognizerKind::Sax, RecognizerKind::Shapelet] {
        let config = RunConfig { recognizer: kind, ..RunConfig::default() };
        let states = fit_states(&series, &config)?;
        let frame = recognition_weights(&segments, &states)?;
        println!("{kind:?}: argmax {:?}", frame.argmax());
        for t in 0..2 {
            let row: Vec<String> = frame.row(t).iter().map(|w| format!("{w:.3}")).collect();
            println!("  segment {t}: [{}]", row.join(", "));
        }
    }
    Ok(())
}
