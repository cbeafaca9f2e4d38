use crate::error::{Error, Result};
use crate::model::Sequence;
use crate::recognition::{recognition_weights, segment, RecognitionFrame, Series, StateModel};
use crate::tensor::Tensor;

/// One supervised example: all but the last segment are observed, the event
/// at the last segment is the prediction target.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    /// Chronological key (start time of the series).
    pub time: i64,
    pub seq: Sequence,
    pub target: u8,
}

impl Sample {
    /// Target of each step: step `k` predicts the event of segment `k + 2`,
    /// and the last step predicts `target`.
    pub fn step_targets(&self) -> Vec<u8> {
        let mut t = self.seq.events[2..].to_vec();
        t.push(self.target);
        t
    }
}

/// Recognises a labelled series and holds its last segment out as target.
/// Needs at least three segments (one snapshot plus the target).
pub fn sample_from_series(series: &Series, states: &StateModel) -> Result<Sample> {
    let labels = series
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid(format!("series {} has no labels", series.id)))?;
    let segments = segment(series)?;
    if segments.len() < 3 {
        return Err(Error::TooFewSegments(segments.len().saturating_sub(1)));
    }
    let n_in = segments.len() - 1;
    let frame = recognition_weights(&segments[..n_in], states)?;
    let seq = Sequence::new(frame, labels[..n_in].to_vec())?;
    Ok(Sample { id: series.id.clone(), time: series.start, seq, target: labels[n_in] })
}

/// Sequence over every segment of a series, for predicting the event after it.
pub fn sequence_from_series(series: &Series, states: &StateModel) -> Result<Sequence> {
    let labels = series
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid(format!("series {} has no labels", series.id)))?;
    let frame = recognition_weights(&segment(series)?, states)?;
    Sequence::new(frame, labels.clone())
}

/// Rebuilds a sample from precomputed recognition rows.
pub fn sample_from_frame(id: &str, time: i64, weights: Tensor, events: Vec<u8>, target: u8) -> Result<Sample> {
    let seq = Sequence::new(RecognitionFrame { weights }, events)?;
    Ok(Sample { id: id.to_string(), time, seq, target })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Partition sizes for `n` samples: `floor(0.8 n)` go to training plus
/// validation, the rest to test; validation is `ceil(0.1)` of the former.
pub fn split_sizes(n: usize) -> Result<(usize, usize, usize)> {
    let train_val = n * 4 / 5;
    let validation = train_val.div_ceil(10);
    let train = train_val - validation;
    let test = n - train_val;
    if train == 0 || validation == 0 || test == 0 {
        return Err(Error::invalid(format!("{n} samples are too few for a train/validation/test split")));
    }
    Ok((train, validation, test))
}

/// Chronological split: earliest samples train, then validation, latest test.
/// Input must already be sorted by `time`.
pub fn split(samples: Vec<Sample>) -> Result<Split> {
    if let Some(w) = samples.windows(2).find(|w| w[1].time < w[0].time) {
        return Err(Error::invalid(format!(
            "samples are not in chronological order ({} at {} follows {} at {})",
            w[1].id, w[1].time, w[0].id, w[0].time
        )));
    }
    let (train, validation, _) = split_sizes(samples.len())?;
    let mut rest = samples;
    let test = rest.split_off(train + validation);
    let validation = rest.split_off(train);
    Ok(Split { train: rest, validation, test })
}
