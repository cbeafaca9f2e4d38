use rand::Rng;

use super::{sq_dist, RecognitionFrame, RecognizerKind, RecognizerMeta, Segment, StateModel};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Independent k-means++ restarts; the lowest final WCSS wins.
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig { k, max_iter: 100, restarts: 10, seed }
    }
}

/// A fitted clustering with its trace, useful for inspecting convergence.
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub model: StateModel,
    pub assignment: Vec<usize>,
    /// WCSS after every assignment step and every transfer pass of the
    /// winning restart.
    pub wcss_history: Vec<f64>,
}

/// Centroids, assignment and WCSS history of one restart.
type Fit = (Vec<Vec<f64>>, Vec<usize>, Vec<f64>);

/// Lloyd's algorithm on flattened segments with k-means++ seeding, then
/// single-point transfers until no move lowers the WCSS.
pub fn fit_kmeans(segments: &[Segment], config: KMeansConfig) -> Result<KMeansFit> {
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if segments.len() < k {
        return Err(Error::invalid(format!("{} segments cannot form {k} clusters", segments.len())));
    }
    let shape = segments[0].shape();
    if segments.iter().any(|s| s.shape() != shape) {
        return Err(Error::shape("fit_kmeans", "segments differ in shape"));
    }
    let points: Vec<&[f64]> = segments.iter().map(Tensor::data).collect();
    let mut rng = crate::rng::stream(config.seed, crate::rng::RECOGNITION);

    let mut best: Option<Fit> = None;
    for _ in 0..config.restarts.max(1) {
        let init = plus_plus_init(&points, k, &mut rng);
        let (centroids, assignment, history) = lloyd(&points, init, config.max_iter);
        let (centroids, assignment, history) = transfer(&points, centroids, assignment, history, config.max_iter);
        let final_wcss = *history.last().expect("lloyd records at least one step");
        if best.as_ref().is_none_or(|b| final_wcss < *b.2.last().unwrap()) {
            best = Some((centroids, assignment, history));
        }
    }
    let (centroids, assignment, wcss_history) = best.expect("at least one restart");

    let patterns = centroids
        .into_iter()
        .map(|c| Tensor::new(shape[0], shape[1], c))
        .collect::<Result<Vec<_>>>()?;
    let meta = RecognizerMeta::Kmeans {
        iterations: wcss_history.len(),
        wcss: *wcss_history.last().unwrap(),
    };
    Ok(KMeansFit { model: StateModel::new(RecognizerKind::Kmeans, patterns, meta)?, assignment, wcss_history })
}

fn plus_plus_init(points: &[&[f64]], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in nearest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].to_vec();
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(points: &[&[f64]], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let k = centroids.len();
    let width = points[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut wcss = 0.0;
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest_centroid(p, &centroids);
            if assignment[i] != j {
                assignment[i] = j;
                changed = true;
            }
            dists[i] = d;
            wcss += d;
        }
        history.push(wcss);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; width]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        // An empty cluster takes over the point worst served by its centroid.
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .expect("points are non-empty");
                centroids[j] = points[far].to_vec();
                dists[far] = 0.0;
            }
        }
    }
    (centroids, assignment, history)
}

fn means(points: &[&[f64]], assignment: &[usize], centroids: &mut [Vec<f64>], counts: &mut [usize]) {
    let width = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; width]; k];
    counts.iter_mut().for_each(|c| *c = 0);
    for (p, &j) in points.iter().zip(assignment) {
        counts[j] += 1;
        for (s, v) in sums[j].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
}

/// Hartigan's refinement of a Lloyd fixed point: moving `x` from `a` to `b`
/// changes the WCSS by `n_b/(n_b+1) |x-c_b|^2 - n_a/(n_a-1) |x-c_a|^2`, and
/// the most negative change is taken while one exists.
fn transfer(
    points: &[&[f64]],
    mut centroids: Vec<Vec<f64>>,
    mut assignment: Vec<usize>,
    mut history: Vec<f64>,
    max_passes: usize,
) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    means(points, &assignment, &mut centroids, &mut counts);
    for _ in 0..max_passes {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(p, &centroids[a]);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let delta = nb / (nb + 1.0) * sq_dist(p, &centroids[b]) - removal;
                // Guard against moves that only trade rounding error.
                if delta < best.1 && delta < -1e-12 * removal.max(f64::MIN_POSITIVE) {
                    best = (b, delta);
                }
            }
            if best.0 != a {
                assignment[i] = best.0;
                means(points, &assignment, &mut centroids, &mut counts);
                moved = true;
            }
        }
        if !moved {
            break;
        }
        history.push(points.iter().zip(&assignment).map(|(p, &j)| sq_dist(p, &centroids[j])).sum());
    }
    (centroids, assignment, history)
}

impl KMeansFit {
    /// Hard assignment as a one-hot frame, handy for comparisons.
    pub fn one_hot(&self) -> Result<RecognitionFrame> {
        let k = self.model.num_states();
        let mut data = vec![0.0; self.assignment.len() * k];
        for (i, &j) in self.assignment.iter().enumerate() {
            data[i * k + j] = 1.0;
        }
        Ok(RecognitionFrame { weights: Tensor::new(self.assignment.len(), k, data)? })
    }
}
