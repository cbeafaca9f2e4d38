//! Synthetic event-prediction benchmark.
//!
//! A latent Markov chain over `K` prototypes emits one noisy copy of its
//! current prototype per segment. The event at segment `j` fires iff the
//! chain moved from the trigger state `A` to `B` between segments `j - 2`
//! and `j - 1`, so events are driven purely by transitions. Each series
//! starts with two unobserved burn-in states drawn from the stationary
//! distribution onward, which keeps the labels of its first two segments
//! defined.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::csv::{render_csv, SeriesRecord};
use crate::error::{Error, Result};

pub const SIDECAR_VERSION: u32 = 1;
pub const BURN_IN: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_series: usize,
    pub segments_per_series: usize,
    pub tau: usize,
    pub num_prototypes: usize,
    /// Standard deviation of the Gaussian noise added to every point.
    pub noise: f64,
    /// Euclidean norm of every prototype.
    pub scale: f64,
    /// Row-stochastic latent transition matrix; uniform when absent.
    pub transition: Option<Vec<Vec<f64>>>,
    /// `[A, B]`: the transition `A -> B` triggers an event.
    pub trigger: [usize; 2],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_series: 700,
            segments_per_series: 21,
            tau: 8,
            num_prototypes: 4,
            noise: 0.3,
            scale: 0.55,
            transition: None,
            trigger: [0, 1],
        }
    }
}

impl SynthConfig {
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        self.transition.clone().unwrap_or_else(|| {
            let k = self.num_prototypes;
            vec![vec![1.0 / k as f64; k]; k]
        })
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_prototypes;
        if k == 0 || self.tau < 2 || k > self.tau {
            return Err(Error::invalid(format!(
                "need 1 <= num_prototypes <= tau and tau >= 2 (got {k} prototypes, tau {})",
                self.tau
            )));
        }
        if self.num_series == 0 || self.segments_per_series == 0 {
            return Err(Error::invalid("num_series and segments_per_series must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("noise must be >= 0 and scale > 0"));
        }
        if self.trigger.iter().any(|&s| s >= k) {
            return Err(Error::invalid(format!("trigger states {:?} outside 0..{k}", self.trigger)));
        }
        let p = self.transition_matrix();
        if p.len() != k || p.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("transition matrix must be {k}x{k}")));
        }
        for (i, row) in p.iter().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("transition row {i} is not a probability distribution")));
            }
        }
        Ok(())
    }

    /// `scale * cos(pi k x) / ||cos(pi k x)||` on `tau` evenly spaced `x` in `[0, 1]`.
    pub fn prototypes(&self) -> Vec<Vec<f64>> {
        let n = self.tau;
        (0..self.num_prototypes)
            .map(|k| {
                let raw: Vec<f64> = (0..n).map(|i| (PI * k as f64 * i as f64 / (n - 1) as f64).cos()).collect();
                let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
                raw.iter().map(|v| self.scale * v / norm).collect()
            })
            .collect()
    }
}

/// Stationary distribution by power iteration from the uniform vector.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Vec<f64> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| pi[i] * p[i][j]).sum()).collect();
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < 1e-15 {
            break;
        }
    }
    pi
}

fn draw(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Ground truth recorded next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub version: u32,
    pub seed: u64,
    pub config: SynthConfig,
    pub prototypes: Vec<Vec<f64>>,
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub burn_in: usize,
    /// Latent state of every emitted segment, per series.
    pub latent: Vec<Vec<usize>>,
    /// Latent states preceding the first segment, per series.
    pub burn_in_states: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub records: Vec<SeriesRecord>,
    pub sidecar: SynthSidecar,
}

impl SynthData {
    /// Whether step `k` of series `i` (segments `k -> k + 1`) is a trigger.
    pub fn is_trigger_step(&self, series: usize, k: usize) -> bool {
        let z = &self.sidecar.latent[series];
        let [a, b] = self.sidecar.config.trigger;
        z[k] == a && z[k + 1] == b
    }

    /// Writes the CSV and a `<stem>.sidecar.json` next to it.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        super::atomic_write(csv_path, render_csv(&self.records)?.as_bytes())?;
        let sidecar = serde_json::to_string_pretty(&self.sidecar)? + "\n";
        super::atomic_write(&sidecar_path(csv_path), sidecar.as_bytes())
    }
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.sidecar.json"))
}

pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<SynthData> {
    config.validate()?;
    let p = config.transition_matrix();
    let pi = stationary_distribution(&p);
    let protos = config.prototypes();
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::invalid(format!("noise: {e}")))?;
    let mut rng = crate::rng::stream(seed, crate::rng::SYNTH);
    let [a, b] = config.trigger;
    let (tau, n_seg) = (config.tau, config.segments_per_series);

    let mut records = Vec::with_capacity(config.num_series);
    let mut latent = Vec::with_capacity(config.num_series);
    let mut burn = Vec::with_capacity(config.num_series);
    for i in 0..config.num_series {
        let mut z = vec![draw(&mut rng, &pi)];
        while z.len() < n_seg + BURN_IN {
            let next = draw(&mut rng, &p[*z.last().expect("non-empty")]);
            z.push(next);
        }
        let mut values = Vec::with_capacity(n_seg * tau);
        let mut labels = Vec::with_capacity(n_seg * tau);
        for j in 0..n_seg {
            let label = u8::from(z[j] == a && z[j + 1] == b);
            for &v in &protos[z[j + BURN_IN]] {
                values.push(vec![v + noise.sample(&mut rng)]);
                labels.push(label);
            }
        }
        records.push(SeriesRecord {
            id: format!("s{i:05}"),
            start: (i * n_seg * tau) as i64,
            values,
            labels: Some(labels),
        });
        burn.push(z[..BURN_IN].to_vec());
        latent.push(z[BURN_IN..].to_vec());
    }
    let sidecar = SynthSidecar {
        version: SIDECAR_VERSION,
        seed,
        config: config.clone(),
        prototypes: protos,
        transition: p,
        stationary: pi,
        burn_in: BURN_IN,
        latent,
        burn_in_states: burn,
    };
    Ok(SynthData { records, sidecar })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_the_trigger_rule() {
        let cfg = SynthConfig { num_series: 20, segments_per_series: 10, ..SynthConfig::default() };
        let data = synth_generate(&cfg, 3).unwrap();
        for (r, (z, pre)) in data.records.iter().zip(data.sidecar.latent.iter().zip(&data.sidecar.burn_in_states)) {
            let full: Vec<usize> = pre.iter().chain(z).copied().collect();
            let labels = r.labels.as_ref().unwrap();
            for j in 0..10 {
                let expected = u8::from(full[j] == 0 && full[j + 1] == 1);
                assert!(labels[j * 8..(j + 1) * 8].iter().all(|&l| l == expected));
            }
        }
    }

    #[test]
    fn unreachable_trigger_gives_no_events() {
        let cfg = SynthConfig {
            num_series: 10,
            transition: Some(vec![
                vec![0.5, 0.0, 0.5, 0.0],
                vec![0.0, 0.5, 0.0, 0.5],
                vec![0.5, 0.0, 0.5, 0.0],
                vec![0.0, 0.5, 0.0, 0.5],
            ]),
            ..SynthConfig::default()
        };
        let data = synth_generate(&cfg, 0).unwrap();
        assert!(data.records.iter().all(|r| r.labels.as_ref().unwrap().iter().all(|&l| l == 0)));
    }

    #[test]
    fn invalid_matrix_is_rejected() {
        let cfg = SynthConfig { transition: Some(vec![vec![0.5, 0.6], vec![0.5, 0.5]]), num_prototypes: 2, ..SynthConfig::default() };
        assert!(synth_generate(&cfg, 0).is_err());
    }

    #[test]
    fn prototypes_are_distinct_with_given_norm() {
        let protos = SynthConfig::default().prototypes();
        for (i, p) in protos.iter().enumerate() {
            assert!((p.iter().map(|v| v * v).sum::<f64>().sqrt() - 0.55).abs() < 1e-12);
            for q in &protos[..i] {
                assert!(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() > 0.1);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig { num_series: 5, ..SynthConfig::default() };
        assert_eq!(synth_generate(&cfg, 9).unwrap(), synth_generate(&cfg, 9).unwrap());
        assert_ne!(synth_generate(&cfg, 9).unwrap(), synth_generate(&cfg, 10).unwrap());
    }
}
