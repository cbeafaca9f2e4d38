//! State recognition: segmenting series, learning state patterns and turning
//! segment-to-state distances into recognition weights.
//!
//! A state is a `tau x dim` pattern. Each segment is compared against every
//! state with the squared Euclidean distance, and the distances of one
//! segment are min-max normalised so that its nearest state gets weight 1
//! and its farthest state weight 0.

mod kmeans;
mod sax;
mod shapelet;

use serde::{Deserialize, Serialize};

pub use kmeans::{fit_kmeans, KMeansConfig, KMeansFit};
pub use sax::{fit_sax, sax_breakpoints, sax_symbols};
pub use shapelet::{best_information_gain, entropy, fit_shapelets, ShapeletConfig};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A `tau x dim` slice of a series, stored time-major.
pub type Segment = Tensor;

/// Raw multivariate series with optional per-segment event labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub id: String,
    /// Time index of the first observation.
    pub start: i64,
    /// `L` observations of dimension `dim`.
    pub values: Vec<Vec<f64>>,
    pub tau: usize,
    /// One binary label per complete segment.
    pub labels: Option<Vec<u8>>,
}

impl Series {
    pub fn new(id: impl Into<String>, values: Vec<Vec<f64>>, tau: usize, labels: Option<Vec<u8>>) -> Result<Self> {
        let series = Series { id: id.into(), start: 0, values, tau, labels };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::invalid("segment length must be positive"));
        }
        let dim = self.dim();
        if dim == 0 || self.values.iter().any(|x| x.len() != dim) {
            return Err(Error::invalid(format!("series {}: inconsistent or zero dimension", self.id)));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("series {}: non-finite observation", self.id)));
        }
        if self.values.len() < self.tau {
            return Err(Error::SeriesTooShort { len: self.values.len(), tau: self.tau });
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.num_segments() {
                return Err(Error::invalid(format!(
                    "series {}: {} labels for {} segments",
                    self.id,
                    labels.len(),
                    self.num_segments()
                )));
            }
            if labels.iter().any(|&y| y > 1) {
                return Err(Error::invalid(format!("series {}: labels must be 0 or 1", self.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn num_segments(&self) -> usize {
        self.values.len() / self.tau
    }
}

/// Splits a series into `floor(L / tau)` non-overlapping segments; the tail
/// shorter than `tau` is dropped.
pub fn segment(series: &Series) -> Result<Vec<Segment>> {
    if series.tau == 0 {
        return Err(Error::invalid("segment length must be positive"));
    }
    if series.len() < series.tau {
        return Err(Error::SeriesTooShort { len: series.len(), tau: series.tau });
    }
    let dim = series.dim();
    series
        .values
        .chunks_exact(series.tau)
        .map(|chunk| Tensor::new(series.tau, dim, chunk.concat()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecognizerKind {
    Kmeans,
    Sax,
    Shapelet,
}

impl std::str::FromStr for RecognizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(RecognizerKind::Kmeans),
            "sax" => Ok(RecognizerKind::Sax),
            "shapelet" => Ok(RecognizerKind::Shapelet),
            other => Err(Error::invalid(format!("unknown recognizer '{other}'"))),
        }
    }
}

/// Recognizer-specific details kept alongside the patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecognizerMeta {
    Kmeans { iterations: usize, wcss: f64 },
    Sax { alphabet_size: usize, breakpoints: Vec<f64>, levels: Vec<f64>, mean: f64, std: f64 },
    Shapelet { candidates: Vec<usize>, gains: Vec<f64>, median_distance: f64 },
}

pub const STATE_MODEL_VERSION: u32 = 1;

/// The learned state patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct StateModel {
    pub kind: RecognizerKind,
    pub tau: usize,
    pub dim: usize,
    pub patterns: Vec<Tensor>,
    pub meta: RecognizerMeta,
}

#[derive(Serialize, Deserialize)]
struct StateModelDoc {
    version: u32,
    kind: RecognizerKind,
    tau: usize,
    dim: usize,
    patterns: Vec<Vec<f64>>,
    metadata: RecognizerMeta,
}

impl StateModel {
    pub fn new(kind: RecognizerKind, patterns: Vec<Tensor>, meta: RecognizerMeta) -> Result<Self> {
        let first = patterns.first().ok_or_else(|| Error::invalid("state model needs at least one pattern"))?;
        let [tau, dim] = first.shape();
        if patterns.iter().any(|p| p.shape() != [tau, dim]) {
            return Err(Error::invalid("state patterns must share one shape"));
        }
        Ok(StateModel { kind, tau, dim, patterns, meta })
    }

    pub fn num_states(&self) -> usize {
        self.patterns.len()
    }

    /// Patterns flattened into a `|V| x (tau * dim)` matrix, one row per state.
    pub fn pattern_matrix(&self) -> Tensor {
        let width = self.tau * self.dim;
        let data = self.patterns.iter().flat_map(|p| p.data().iter().copied()).collect();
        Tensor::from_parts(self.num_states(), width, data)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = StateModelDoc {
            version: STATE_MODEL_VERSION,
            kind: self.kind,
            tau: self.tau,
            dim: self.dim,
            patterns: self.patterns.iter().map(|p| p.data().to_vec()).collect(),
            metadata: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateModelDoc = serde_json::from_str(text)?;
        if doc.version != STATE_MODEL_VERSION {
            return Err(Error::invalid(format!("unsupported state model version {}", doc.version)));
        }
        let patterns = doc
            .patterns
            .into_iter()
            .map(|p| Tensor::new(doc.tau, doc.dim, p))
            .collect::<Result<Vec<_>>>()?;
        let model = StateModel::new(doc.kind, patterns, doc.metadata)?;
        Ok(model)
    }
}

/// Squared Euclidean distance between a segment and a pattern.
pub fn distance(segment: &Segment, pattern: &Tensor) -> Result<f64> {
    if segment.shape() != pattern.shape() {
        let (a, b) = (segment.shape(), pattern.shape());
        return Err(Error::shape("distance", format!("segment {}x{} vs pattern {}x{}", a[0], a[1], b[0], b[1])));
    }
    Ok(sq_dist(segment.data(), pattern.data()))
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Recognition weights for `T` segments over `|V|` states, one row per segment.
#[derive(Clone, Debug, PartialEq)]
pub struct RecognitionFrame {
    pub weights: Tensor,
}

impl RecognitionFrame {
    pub fn num_segments(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_states(&self) -> usize {
        self.weights.cols()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.weights.row_slice(t)
    }

    /// Index of the highest-weight state per segment (first on ties).
    pub fn argmax(&self) -> Vec<usize> {
        (0..self.num_segments())
            .map(|t| {
                let row = self.row(t);
                (0..row.len()).fold(0, |best, v| if row[v] > row[best] { v } else { best })
            })
            .collect()
    }
}

/// Min-max normalises one segment's distances: nearest state 1, farthest 0.
/// When every distance is equal the weights are uniform `1 / |V|`.
pub fn normalize_distances(distances: &[f64]) -> Vec<f64> {
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range <= f64::EPSILON * max.abs() {
        return vec![1.0 / distances.len() as f64; distances.len()];
    }
    distances.iter().map(|d| ((max - d) / range).clamp(0.0, 1.0)).collect()
}

pub fn recognition_weights(segments: &[Segment], model: &StateModel) -> Result<RecognitionFrame> {
    if segments.is_empty() {
        return Err(Error::invalid("no segments to recognise"));
    }
    let mut data = Vec::with_capacity(segments.len() * model.num_states());
    for seg in segments {
        let d = model.patterns.iter().map(|p| distance(seg, p)).collect::<Result<Vec<_>>>()?;
        data.extend(normalize_distances(&d));
    }
    Ok(RecognitionFrame { weights: Tensor::new(segments.len(), model.num_states(), data)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn univariate(values: &[f64], tau: usize) -> Series {
        Series::new("s", values.iter().map(|&v| vec![v]).collect(), tau, None).unwrap()
    }

    #[test]
    fn floor_rule_drops_tail() {
        let s = univariate(&(0..10).map(f64::from).collect::<Vec<_>>(), 3);
        let segs = segment(&s).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[2].data(), &[6.0, 7.0, 8.0]);
    }

    #[test]
    fn exact_length_is_one_segment() {
        let s = univariate(&[1.0, 2.0, 3.0], 3);
        let segs = segment(&s).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn too_short_series_errors() {
        let s = Series { id: "x".into(), start: 0, values: vec![vec![1.0], vec![2.0]], tau: 3, labels: None };
        let err = segment(&s).unwrap_err();
        assert!(err.to_string().contains("series shorter than one segment"));
    }

    #[test]
    fn tail_content_is_irrelevant() {
        let base: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let mut a = base.clone();
        a.extend([100.0, -5.0]);
        let mut b = base;
        b.extend([0.0, 3.0]);
        assert_eq!(segment(&univariate(&a, 3)).unwrap(), segment(&univariate(&b, 3)).unwrap());
    }

    #[test]
    fn distance_cases() {
        let a = Tensor::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 1.0);
        assert_eq!(distance(&a, &b).unwrap(), 6.0);
        let c = Tensor::zeros(2, 3);
        assert!(matches!(distance(&a, &c), Err(Error::Shape { .. })));
    }

    #[test]
    fn min_max_examples() {
        assert_eq!(normalize_distances(&[2.0, 4.0, 6.0]), vec![1.0, 0.5, 0.0]);
        assert_eq!(normalize_distances(&[3.0, 3.0, 3.0]), vec![1.0 / 3.0; 3]);
        assert_eq!(normalize_distances(&[7.5]), vec![1.0]);
    }

    #[test]
    fn state_model_json_round_trip() {
        let patterns = vec![Tensor::zeros(2, 1), Tensor::ones(2, 1)];
        let model = StateModel::new(RecognizerKind::Kmeans, patterns, RecognizerMeta::Kmeans { iterations: 3, wcss: 0.5 })
            .unwrap();
        let text = model.to_json().unwrap();
        assert!(text.contains("\"version\": 1"));
        let back = StateModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), text);
    }
}
