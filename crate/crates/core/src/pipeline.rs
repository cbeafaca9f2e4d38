//! Glue from raw records to trained-model inputs, shared by the CLI and the
//! examples.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{RunConfig, SeriesRecord};
use crate::model::{AnyModel, EvoNet, ModelKind};
use crate::recognition::{
    fit_kmeans, fit_sax, fit_shapelets, segment, KMeansConfig, RecognizerKind, Segment, Series, ShapeletConfig,
    StateModel,
};
use crate::train::{baseline_wog, evaluate, sample_from_series, split, split_sizes, train, Metrics, Sample, Split, TrainReport};

pub fn series_from_records(records: &[SeriesRecord], tau: usize) -> Result<Vec<Series>> {
    records.iter().map(|r| r.to_series(tau)).collect()
}

fn all_segments(series: &[Series]) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for s in series {
        out.extend(segment(s)?);
    }
    Ok(out)
}

/// Learns `num_states` patterns from every segment of every series.
pub fn fit_states(series: &[Series], config: &RunConfig) -> Result<StateModel> {
    if series.is_empty() {
        return Err(Error::invalid("no series to learn states from"));
    }
    match config.recognizer {
        RecognizerKind::Kmeans => {
            let km = KMeansConfig {
                k: config.num_states,
                max_iter: config.kmeans_max_iter,
                restarts: config.kmeans_restarts,
                seed: config.seed,
            };
            Ok(fit_kmeans(&all_segments(series)?, km)?.model)
        }
        RecognizerKind::Sax => {
            // One global normalisation over the whole segments of all series.
            let tau = config.tau;
            let values: Vec<Vec<f64>> = series
                .iter()
                .flat_map(|s| s.values[..s.num_segments() * tau].iter().cloned())
                .collect();
            fit_sax(&Series::new("all", values, tau, None)?, config.num_states)
        }
        RecognizerKind::Shapelet => {
            let segments = all_segments(series)?;
            let mut labels = Vec::with_capacity(segments.len());
            for s in series {
                let l = s
                    .labels
                    .as_ref()
                    .ok_or_else(|| Error::invalid(format!("shapelets need labels; series {} has none", s.id)))?;
                labels.extend_from_slice(l);
            }
            let sc = ShapeletConfig { k: config.num_states, candidates: config.shapelet_candidates, seed: config.seed };
            fit_shapelets(&segments, &labels, sc)
        }
    }
}

/// One sample per series, ordered by start time.
pub fn build_samples(series: &[Series], states: &StateModel) -> Result<Vec<Sample>> {
    let mut samples = series.iter().map(|s| sample_from_series(s, states)).collect::<Result<Vec<_>>>()?;
    samples.sort_by_key(|s| s.time);
    Ok(samples)
}

/// Series ordered by start time, split at the same boundary as the samples
/// built from them: the first part trains, the rest is held out.
fn chronological(series: &[Series]) -> Result<(Vec<Series>, usize)> {
    let mut sorted = series.to_vec();
    sorted.sort_by_key(|s| s.start);
    let (train, validation, _) = split_sizes(sorted.len())?;
    Ok((sorted, train + validation))
}

pub struct TrainOutcome {
    pub model: AnyModel,
    pub states: StateModel,
    pub report: TrainReport,
    pub split: Split,
}

/// Fits states on the training and validation series only, then trains the
/// requested model on the chronological split.
pub fn train_stage(series: &[Series], config: &RunConfig, kind: ModelKind) -> Result<TrainOutcome> {
    config.validate()?;
    let (sorted, fit_count) = chronological(series)?;
    let states = fit_states(&sorted[..fit_count], config)?;
    let split = split(build_samples(&sorted, &states)?)?;
    let net = config.network(states.dim);
    let (model, report) = match kind {
        ModelKind::Evonet => {
            let mut m = EvoNet::new(net, states.pattern_matrix(), config.seed)?;
            let report = train(&mut m, &split.train, &split.validation, &config.train)?;
            (AnyModel::EvoNet(m), report)
        }
        ModelKind::Wog => {
            let (m, report) = baseline_wog(&net, &split.train, &split.validation, &config.train)?;
            (AnyModel::Wog(m), report)
        }
    };
    Ok(TrainOutcome { model, states, report, split })
}

/// Metrics on the held-out (latest) part of the chronological split.
pub fn evaluate_stage(series: &[Series], states: &StateModel, model: &AnyModel, threshold: f64) -> Result<Metrics> {
    let (sorted, _) = chronological(series)?;
    let split = split(build_samples(&sorted, states)?)?;
    evaluate(model, &split.test, threshold)
}

/// Where `train` leaves the state patterns that belong to a checkpoint.
pub fn states_path(model_path: &Path) -> PathBuf {
    let stem = model_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    model_path.with_file_name(format!("{stem}.states.json"))
}
