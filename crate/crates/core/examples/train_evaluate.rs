//! Trains the full network and the graph-free baseline through the
//! chronological pipeline and reports test metrics for both.
//!
//! cargo run --release --example train_evaluate

use evonet::io::{synth_generate, RunConfig};
use evonet::model::ModelKind;
use evonet::pipeline::{evaluate_stage, series_from_records, train_stage};

fn main() -> evonet::Result<()> {
    let mut config = RunConfig::default();
    config.train.iterations = 40;
    config.train.lr_decay_every = 40;
    config.train.learning_rate = 0.01;
    config.train.batch_size = 8;
    let data = synth_generate(&config.synth, config.seed)?;
    let series = series_from_records(&data.records, config.tau)?;

    for kind in [ModelKind::Evonet, ModelKind::Wog] {
        let out = train_stage(&series, &config, kind)?;
        let metrics = evaluate_stage(&series, &out.states, &out.model, config.threshold)?;
        println!(
            "{kind:?}: best iteration {} val loss {:.4}; test auc {} f1 {:.3}",
            out.report.best_iteration,
            out.report.best_val_loss,
            metrics.auc.map_or("undefined".to_string(), |a| format!("{a:.4}")),
            metrics.f1
        );
    }
    Ok(())
}
