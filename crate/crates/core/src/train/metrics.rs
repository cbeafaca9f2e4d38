use serde::Serialize;

use super::data::Sample;
use crate::error::{Error, Result};
use crate::model::SequenceModel;

pub const METRICS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_scores(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    /// `2TP / (2TP + FP + FN)`, and 0 when that denominator is 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// Area under the ROC curve from mid-ranks, so tied scores count one half.
/// `None` when either class is absent.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 || scores.len() != labels.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub version: u32,
    pub f1: f64,
    /// `null` when the labels hold a single class.
    pub auc: Option<f64>,
    pub auc_defined: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub threshold: f64,
}

impl Metrics {
    pub fn from_scores(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let c = Confusion::from_scores(scores, labels, threshold);
        let auc = auc(scores, labels);
        Metrics {
            version: METRICS_VERSION,
            f1: c.f1(),
            auc,
            auc_defined: auc.is_some(),
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            threshold,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Final-step probability of an event for every sample.
pub fn final_scores(model: &dyn SequenceModel, samples: &[Sample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            let p = model.predict(&s.seq)?;
            p.positive.last().copied().ok_or_else(|| Error::invalid("sequence has no steps"))
        })
        .collect()
}

pub fn evaluate(model: &dyn SequenceModel, samples: &[Sample], threshold: f64) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let scores = final_scores(model, samples)?;
    let labels: Vec<u8> = samples.iter().map(|s| s.target).collect();
    Ok(Metrics::from_scores(&scores, &labels, threshold))
}
