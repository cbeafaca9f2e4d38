//! Optimisation, the training loop and evaluation.
//!
//! One iteration is one pass over the training samples in a freshly shuffled
//! order, cut into mini-batches. Per-sample gradients are summed in batch
//! order, so a fixed seed reproduces every loss value bit for bit.

mod data;
mod metrics;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use data::{sample_from_frame, sample_from_series, sequence_from_series, split, split_sizes, Sample, Split};
pub use metrics::{auc, evaluate, final_scores, Confusion, Metrics, METRICS_VERSION};

use crate::autodiff::{grad_check, GradCheckReport, Tape, Var};
use crate::error::{Error, Result};
use crate::model::{EvoNet, EvoNetConfig, MessageKind, SequenceModel, WogNet};
use crate::recognition::{recognition_weights, RecognizerKind, RecognizerMeta, StateModel};
use crate::tensor::Tensor;

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Steps before this index carry no loss.
    pub warmup_steps: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Supervise only the last step of each sample.
    pub final_step_only: bool,
    /// Weight each class by the inverse of its frequency among the targets.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            lr_decay_factor: 10.0,
            lr_decay_every: 20,
            iterations: 100,
            batch_size: 32,
            seed: 0,
            warmup_steps: 1,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            final_step_only: false,
            class_weighting: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("learning_rate", self.learning_rate)?;
        positive("lr_decay_factor", self.lr_decay_factor)?;
        positive("adam_epsilon", self.adam_epsilon)?;
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("lr_decay_every", self.lr_decay_every),
            ("iterations", self.iterations),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// `learning_rate / factor^floor(iteration / every)`.
pub fn lr_at(iteration: usize, config: &TrainConfig) -> f64 {
    let drops = (iteration / config.lr_decay_every) as i32;
    config.learning_rate / config.lr_decay_factor.powi(drops)
}

/// Binary cross-entropy with the probability clamped into `[1e-12, 1 - 1e-12]`.
pub fn cross_entropy(prob_pos: f64, label: u8) -> f64 {
    let p = prob_pos.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Tape version of [`cross_entropy`] on a `1 x 2` probability row.
pub fn cross_entropy_var(tape: &mut Tape, probs: Var, label: u8) -> Result<Var> {
    if label > 1 {
        return Err(Error::invalid("label must be 0 or 1"));
    }
    let pick = tape.constant(Tensor::from_parts(2, 1, vec![0.0, 1.0]));
    let p = tape.matmul(probs, pick)?;
    let p = tape.clamp(p, PROB_FLOOR, 1.0 - PROB_FLOOR)?;
    let q = if label == 1 {
        p
    } else {
        let neg = tape.scale(p, -1.0)?;
        let one = tape.constant(Tensor::ones(1, 1));
        tape.add(one, neg)?
    };
    let ln = tape.ln(q)?;
    tape.scale(ln, -1.0)
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: i32,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    pub fn new(params: &[&Tensor], config: &TrainConfig) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        Adam { beta1: config.beta1, beta2: config.beta2, epsilon: config.adam_epsilon, t: 0, m: zeros.clone(), v: zeros }
    }

    /// Applies one update. A non-finite gradient aborts before anything changes.
    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor], lr: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::shape("adam_step", format!("{} params, {} grads", params.len(), grads.len())));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::shape("adam_step", format!("tensor {i} shape mismatch")));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "adam_step" });
            }
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
            for (k, (w, &gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * gk;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * gk * gk;
                *w -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Per-class loss weights `[w0, w1]`.
pub fn class_weights(samples: &[Sample], config: &TrainConfig) -> [f64; 2] {
    if !config.class_weighting {
        return [1.0, 1.0];
    }
    let mut counts = [0usize; 2];
    for s in samples {
        let targets = s.step_targets();
        for k in supervised_steps(targets.len(), config) {
            counts[usize::from(targets[k])] += 1;
        }
    }
    let total = (counts[0] + counts[1]) as f64;
    counts.map(|c| if c == 0 { 1.0 } else { total / (2.0 * c as f64) })
}

fn supervised_steps(steps: usize, config: &TrainConfig) -> std::ops::Range<usize> {
    if config.final_step_only {
        steps.saturating_sub(1)..steps
    } else {
        config.warmup_steps.min(steps)..steps
    }
}

/// Mean weighted loss over the supervised steps of one sample.
pub fn sample_loss(
    tape: &mut Tape,
    model: &(impl SequenceModel + ?Sized),
    params: &[Var],
    sample: &Sample,
    config: &TrainConfig,
    weights: [f64; 2],
) -> Result<Var> {
    let out = model.forward(tape, params, &sample.seq)?;
    let targets = sample.step_targets();
    let steps = supervised_steps(targets.len(), config);
    if steps.is_empty() {
        return Err(Error::invalid(format!(
            "sample {} has {} steps, not more than warmup_steps = {}",
            sample.id,
            targets.len(),
            config.warmup_steps
        )));
    }
    let count = steps.len() as f64;
    let mut total: Option<Var> = None;
    for k in steps {
        let ce = cross_entropy_var(tape, out.probs[k], targets[k])?;
        let ce = tape.scale(ce, weights[usize::from(targets[k])] / count)?;
        total = Some(match total {
            Some(t) => tape.add(t, ce)?,
            None => ce,
        });
    }
    Ok(total.expect("at least one supervised step"))
}

/// Loss value and parameter gradients for one sample.
pub fn sample_gradient(
    model: &(impl SequenceModel + ?Sized),
    sample: &Sample,
    config: &TrainConfig,
    weights: [f64; 2],
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let params = model.bind(&mut tape, true);
    let loss = sample_loss(&mut tape, model, &params, sample, config, weights)?;
    let grads = tape.backward(loss)?;
    let value = tape.value(loss).get(0, 0);
    Ok((value, params.iter().map(|&p| grads.wrt(p)).collect()))
}

/// Unweighted mean loss over `samples`.
pub fn mean_loss(model: &(impl SequenceModel + ?Sized), samples: &[Sample], config: &TrainConfig) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let mut tape = Tape::new();
        let params = model.bind(&mut tape, false);
        let loss = sample_loss(&mut tape, model, &params, s, config, [1.0, 1.0])?;
        total += tape.value(loss).get(0, 0);
    }
    Ok(total / samples.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub train_loss: f64,
    /// Training loss stands in when there is no validation set.
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub curve: Vec<CurvePoint>,
    pub best_iteration: usize,
    pub best_val_loss: f64,
}

impl TrainReport {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("iteration,train_loss,val_loss,lr\n");
        for p in &self.curve {
            let _ = writeln!(out, "{},{},{},{}", p.iteration, p.train_loss, p.val_loss, p.lr);
        }
        out
    }
}

fn snapshot(model: &(impl SequenceModel + ?Sized)) -> Vec<Tensor> {
    model.parameters().into_iter().cloned().collect()
}

fn restore(model: &mut (impl SequenceModel + ?Sized), saved: &[Tensor]) {
    for (p, s) in model.parameters_mut().into_iter().zip(saved) {
        *p = s.clone();
    }
}

fn diverged(iteration: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { op } => Error::Diverged { iteration, reason: format!("non-finite value in {op}") },
        other => other,
    }
}

/// Trains in place and leaves the parameters of the best validation loss.
/// On divergence the parameters of the last completed iteration are kept.
pub fn train(
    model: &mut (impl SequenceModel + ?Sized),
    train_set: &[Sample],
    validation: &[Sample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let weights = class_weights(train_set, config);
    let mut adam = Adam::new(&model.parameters(), config);
    let mut rng = crate::rng::stream(config.seed, crate::rng::BATCHING);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = snapshot(model);
    let mut best_loss = f64::INFINITY;
    let mut best_iteration = 0;
    let mut curve = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let last_good = snapshot(model);
        let lr = lr_at(iteration, config);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let result = (|| -> Result<()> {
            for batch in order.chunks(config.batch_size) {
                let mut acc: Option<Vec<Tensor>> = None;
                for &i in batch {
                    let (loss, grads) = sample_gradient(model, &train_set[i], config, weights)?;
                    loss_sum += loss;
                    match &mut acc {
                        Some(a) => a.iter_mut().zip(&grads).for_each(|(a, g)| a.add_assign(g)),
                        None => acc = Some(grads),
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                let grads: Vec<Tensor> = acc.expect("non-empty batch").iter().map(|g| g.map(|v| v * scale)).collect();
                adam.step(model.parameters_mut(), &grads, lr)?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            restore(model, &last_good);
            return Err(diverged(iteration, e));
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = if validation.is_empty() {
            train_loss
        } else {
            match mean_loss(model, validation, config) {
                Ok(v) => v,
                Err(e) => {
                    restore(model, &last_good);
                    return Err(diverged(iteration, e));
                }
            }
        };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            restore(model, &last_good);
            return Err(Error::Diverged { iteration, reason: "loss is not finite".into() });
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best_iteration = iteration;
            best = snapshot(model);
        }
        curve.push(CurvePoint { iteration, train_loss, val_loss, lr });
    }
    restore(model, &best);
    Ok(TrainReport { curve, best_iteration, best_val_loss: best_loss })
}

/// Trains the graph-free ablation on the same samples.
pub fn baseline_wog(
    config: &EvoNetConfig,
    train_set: &[Sample],
    validation: &[Sample],
    train_config: &TrainConfig,
) -> Result<(WogNet, TrainReport)> {
    let mut net = WogNet::new(config.clone(), train_config.seed)?;
    let report = train(&mut net, train_set, validation, train_config)?;
    Ok((net, report))
}

/// Finite-difference check of every parameter of `model` on one sample.
pub fn grad_check_sample(
    model: &(impl SequenceModel + ?Sized),
    sample: &Sample,
    config: &TrainConfig,
    step: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let named: Vec<(String, Tensor)> = model
        .layout()
        .into_iter()
        .zip(model.parameters())
        .map(|(s, t)| (s.name, t.clone()))
        .collect();
    grad_check(|tape, vars| sample_loss(tape, model, vars, sample, config, [1.0, 1.0]), &named, step, tol)
}

/// Worst relative error per parameter group (the name up to the first dot).
pub fn group_errors(report: &GradCheckReport) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for (name, err) in &report.groups {
        let group = name.split('.').next().unwrap_or(name).to_string();
        match out.iter_mut().find(|(g, _)| *g == group) {
            Some((_, e)) => *e = e.max(*err),
            None => out.push((group, *err)),
        }
    }
    out
}

pub const GRAD_CHECK_STEP: f64 = 1e-5;
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-4;

/// Gradient check of a small random network: two states, segments of four
/// univariate points, `|U| = 8`, three observed segments and one target.
pub fn evonet_grad_check(seed: u64, kind: MessageKind) -> Result<GradCheckReport> {
    let (tau, states, segments) = (4, 2, 4);
    let mut rng = crate::rng::stream(seed, crate::rng::SYNTH);
    let mut normal = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let patterns = (0..states).map(|_| Tensor::new(tau, 1, normal(tau))).collect::<Result<Vec<_>>>()?;
    let model_states = StateModel::new(RecognizerKind::Kmeans, patterns, RecognizerMeta::Kmeans { iterations: 0, wcss: 0.0 })?;
    let segs = (0..segments).map(|_| Tensor::new(tau, 1, normal(tau))).collect::<Result<Vec<_>>>()?;
    let frame = recognition_weights(&segs[..segments - 1], &model_states)?;
    let sample = sample_from_frame("grad-check", 0, frame.weights, vec![1, 0, 1], 1)?;

    let config = EvoNetConfig { u_size: 8, hg_size: 8, message_kind: kind, ..EvoNetConfig::new(states, tau, 1) };
    let net = EvoNet::new(config, model_states.pattern_matrix(), seed)?;
    let train_config = TrainConfig { warmup_steps: 0, ..TrainConfig::default() };
    grad_check_sample(&net, &sample, &train_config, GRAD_CHECK_STEP, GRAD_CHECK_TOLERANCE)
}
