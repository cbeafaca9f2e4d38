use rand::seq::index::sample;

use super::{sq_dist, RecognizerKind, RecognizerMeta, Segment, StateModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeletConfig {
    pub k: usize,
    /// Size of the sampled candidate pool.
    pub candidates: usize,
    pub seed: u64,
}

impl ShapeletConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ShapeletConfig { k, candidates: 200, seed }
    }
}

/// Binary entropy (nats) of a set with `pos` positives out of `n`.
pub fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

/// Best information gain of splitting by `distance <= threshold` over every
/// threshold between consecutive distinct distances.
pub fn best_information_gain(distances: &[f64], labels: &[u8]) -> f64 {
    let n = distances.len();
    let total_pos = labels.iter().filter(|&&y| y == 1).count();
    let parent = entropy(total_pos, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));

    let mut best = 0.0_f64;
    let mut left_pos = 0;
    for (i, &idx) in order.iter().enumerate().take(n.saturating_sub(1)) {
        left_pos += usize::from(labels[idx] == 1);
        if distances[order[i + 1]] == distances[idx] {
            continue;
        }
        let left = i + 1;
        let right = n - left;
        let child = (left as f64 * entropy(left_pos, left) + right as f64 * entropy(total_pos - left_pos, right)) / n as f64;
        best = best.max(parent - child);
    }
    best
}

/// Picks `k` discriminative segments as states.
///
/// Candidates are scored by the information gain of their distance profile,
/// ranked, then filtered greedily: a candidate closer than the median
/// pairwise candidate distance to an already chosen one is skipped. If the
/// filter leaves fewer than `k`, skipped candidates fill in by rank.
pub fn fit_shapelets(segments: &[Segment], labels: &[u8], config: ShapeletConfig) -> Result<StateModel> {
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if labels.len() != segments.len() {
        return Err(Error::invalid(format!("{} labels for {} segments", labels.len(), segments.len())));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::invalid("shapelet selection needs both classes in the labels"));
    }
    if config.candidates < k || segments.len() < k {
        return Err(Error::invalid(format!(
            "need at least k = {k} candidates (pool {}, segments {})",
            config.candidates,
            segments.len()
        )));
    }
    let shape = segments[0].shape();
    if segments.iter().any(|s| s.shape() != shape) {
        return Err(Error::shape("fit_shapelets", "segments differ in shape"));
    }

    let mut rng = crate::rng::stream(config.seed, crate::rng::RECOGNITION);
    let pool_size = config.candidates.min(segments.len());
    let mut pool = sample(&mut rng, segments.len(), pool_size).into_vec();
    pool.sort_unstable();

    let gains: Vec<f64> = pool
        .iter()
        .map(|&c| {
            let d: Vec<f64> = segments.iter().map(|s| sq_dist(s.data(), segments[c].data())).collect();
            best_information_gain(&d, labels)
        })
        .collect();

    let mut ranked: Vec<usize> = (0..pool.len()).collect();
    ranked.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(pool[a].cmp(&pool[b])));

    let mut pairwise = Vec::new();
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            pairwise.push(sq_dist(segments[pool[i]].data(), segments[pool[j]].data()));
        }
    }
    let median = median(&mut pairwise);

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for &r in &ranked {
        if chosen.len() == k {
            break;
        }
        let too_close = chosen
            .iter()
            .any(|&c| sq_dist(segments[pool[c]].data(), segments[pool[r]].data()) < median);
        if too_close {
            skipped.push(r);
        } else {
            chosen.push(r);
        }
    }
    for r in skipped {
        if chosen.len() == k {
            break;
        }
        chosen.push(r);
    }

    let patterns = chosen.iter().map(|&r| segments[pool[r]].clone()).collect();
    let meta = RecognizerMeta::Shapelet {
        candidates: chosen.iter().map(|&r| pool[r]).collect(),
        gains: chosen.iter().map(|&r| gains[r]).collect(),
        median_distance: median,
    };
    StateModel::new(RecognizerKind::Shapelet, patterns, meta)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
