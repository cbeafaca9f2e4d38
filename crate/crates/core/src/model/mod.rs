//! The recurrent graph network over evolutionary state graphs.
//!
//! Row-vector convention throughout: node states are the rows of an
//! `|V| x |h|` matrix, weights are stored `[inputs, outputs]` and applied as
//! `x W + b`. Every operation records onto an autodiff [`Tape`], so the same
//! code serves inference (parameters bound as constants) and training
//! (parameters bound as tracked leaves).

mod baseline;
mod checkpoint;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use baseline::WogNet;
pub use checkpoint::{load_model, save_model, AnyModel, Checkpoint, ModelKind, CHECKPOINT_VERSION};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{build_graph_sequence, EvoStateGraph};
use crate::recognition::RecognitionFrame;
use crate::tensor::Tensor;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Pool,
    Ggnn,
    Gat,
}

impl FromStr for MessageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pool" => Ok(MessageKind::Pool),
            "ggnn" => Ok(MessageKind::Ggnn),
            "gat" => Ok(MessageKind::Gat),
            other => Err(Error::invalid(format!("unknown message kind '{other}' (expected pool, ggnn or gat)"))),
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::Pool => "pool",
            MessageKind::Ggnn => "ggnn",
            MessageKind::Gat => "gat",
        })
    }
}

fn default_gat_epsilon() -> f64 {
    crate::graph::DEFAULT_EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvoNetConfig {
    pub num_states: usize,
    pub tau: usize,
    pub dim: usize,
    pub u_size: usize,
    pub hg_size: usize,
    pub message_kind: MessageKind,
    pub attention_enabled: bool,
    /// Minimum incoming weight for a node to count as a GAT neighbour.
    #[serde(default = "default_gat_epsilon")]
    pub gat_epsilon: f64,
}

impl EvoNetConfig {
    pub fn new(num_states: usize, tau: usize, dim: usize) -> Self {
        EvoNetConfig {
            num_states,
            tau,
            dim,
            u_size: 32,
            hg_size: 32,
            message_kind: MessageKind::Ggnn,
            attention_enabled: true,
            gat_epsilon: default_gat_epsilon(),
        }
    }

    /// Width of a node state: one flattened pattern.
    pub fn node_size(&self) -> usize {
        self.tau * self.dim
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_states", self.num_states),
            ("tau", self.tau),
            ("dim", self.dim),
            ("u_size", self.u_size),
            ("hg_size", self.hg_size),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.gat_epsilon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::invalid("gat_epsilon must be positive"));
        }
        Ok(())
    }
}

/// Gate weights of one LSTM; `w_*` is `[hidden + input, hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<T> {
    pub w_f: T,
    pub b_f: T,
    pub w_i: T,
    pub b_i: T,
    pub w_c: T,
    pub b_c: T,
    pub w_o: T,
    pub b_o: T,
}

impl<T> Lstm<T> {
    fn push_refs<'a>(&'a self, out: &mut Vec<&'a T>) {
        out.extend([&self.w_f, &self.b_f, &self.w_i, &self.b_i, &self.w_c, &self.b_c, &self.w_o, &self.b_o]);
    }

    fn push_muts<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend([
            &mut self.w_f,
            &mut self.b_f,
            &mut self.w_i,
            &mut self.b_i,
            &mut self.w_c,
            &mut self.b_c,
            &mut self.w_o,
            &mut self.b_o,
        ]);
    }

    fn take(it: &mut impl Iterator<Item = T>) -> Self {
        let mut next = || it.next().expect("layout length checked");
        Lstm {
            w_f: next(),
            b_f: next(),
            w_i: next(),
            b_i: next(),
            w_c: next(),
            b_c: next(),
            w_o: next(),
            b_o: next(),
        }
    }

    pub(crate) fn layout(prefix: &str, input: usize, hidden: usize, out: &mut Vec<ParamSpec>) {
        for gate in ["f", "i", "c", "o"] {
            out.push(ParamSpec::new(format!("{prefix}.w_{gate}"), hidden + input, hidden, hidden + input));
            out.push(ParamSpec::new(format!("{prefix}.b_{gate}"), 1, hidden, hidden + input));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message<T> {
    Pool,
    Ggnn { w_in: T, w_out: T, b: T },
    /// `w` is `[2|h|, 1]`: the first half scores the receiving node, the
    /// second half the sending one.
    Gat { w: T },
}

/// All trainable tensors of the network, generic so that the same layout
/// holds values (`Tensor`) or tape handles (`Var`).
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub message: Message<T>,
    pub w_alpha: T,
    pub phi_h: Lstm<T>,
    pub phi_u: Lstm<T>,
    pub w_fc: T,
    pub b_fc: T,
    pub w_cls: T,
    pub b_cls: T,
}

pub type EvoNetParams = Params<Tensor>;

/// Name, shape and initialisation fan-in of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: [usize; 2],
    pub fan_in: usize,
}

impl ParamSpec {
    pub(crate) fn new(name: String, rows: usize, cols: usize, fan_in: usize) -> Self {
        ParamSpec { name, shape: [rows, cols], fan_in }
    }
}

impl<T> Params<T> {
    pub fn layout(config: &EvoNetConfig) -> Vec<ParamSpec> {
        let (hd, u, hg) = (config.node_size(), config.u_size, config.hg_size);
        let mut out = Vec::new();
        match config.message_kind {
            MessageKind::Pool => {}
            MessageKind::Ggnn => {
                out.push(ParamSpec::new("message.w_in".into(), hd, hd, hd));
                out.push(ParamSpec::new("message.w_out".into(), hd, hd, hd));
                out.push(ParamSpec::new("message.b".into(), 1, hd, hd));
            }
            MessageKind::Gat => out.push(ParamSpec::new("message.w".into(), 2 * hd, 1, 2 * hd)),
        }
        out.push(ParamSpec::new("attention.w_alpha".into(), u + hd, 1, u + hd));
        Lstm::<T>::layout("phi_h", hd + u, hd, &mut out);
        Lstm::<T>::layout("phi_u", 1 + hd, u, &mut out);
        out.push(ParamSpec::new("readout.w_fc".into(), u + hd, hg, u + hd));
        out.push(ParamSpec::new("readout.b_fc".into(), 1, hg, u + hd));
        out.push(ParamSpec::new("classifier.w".into(), hg, 2, hg));
        out.push(ParamSpec::new("classifier.b".into(), 1, 2, hg));
        out
    }

    /// References in layout order.
    pub fn flat(&self) -> Vec<&T> {
        let mut out = Vec::new();
        match &self.message {
            Message::Pool => {}
            Message::Ggnn { w_in, w_out, b } => out.extend([w_in, w_out, b]),
            Message::Gat { w } => out.push(w),
        }
        out.push(&self.w_alpha);
        self.phi_h.push_refs(&mut out);
        self.phi_u.push_refs(&mut out);
        out.extend([&self.w_fc, &self.b_fc, &self.w_cls, &self.b_cls]);
        out
    }

    pub fn flat_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        match &mut self.message {
            Message::Pool => {}
            Message::Ggnn { w_in, w_out, b } => out.extend([w_in, w_out, b]),
            Message::Gat { w } => out.push(w),
        }
        out.push(&mut self.w_alpha);
        self.phi_h.push_muts(&mut out);
        self.phi_u.push_muts(&mut out);
        out.extend([&mut self.w_fc, &mut self.b_fc, &mut self.w_cls, &mut self.b_cls]);
        out
    }

    /// Rebuilds from items in layout order.
    pub fn from_flat(kind: MessageKind, items: Vec<T>) -> Result<Self> {
        let expected = match kind {
            MessageKind::Pool => 0,
            MessageKind::Ggnn => 3,
            MessageKind::Gat => 1,
        } + 21;
        if items.len() != expected {
            return Err(Error::invalid(format!("{kind} network needs {expected} parameter tensors, got {}", items.len())));
        }
        let mut it = items.into_iter();
        let message = match kind {
            MessageKind::Pool => Message::Pool,
            MessageKind::Ggnn => {
                let (w_in, w_out, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                Message::Ggnn { w_in, w_out, b }
            }
            MessageKind::Gat => Message::Gat { w: it.next().unwrap() },
        };
        let w_alpha = it.next().unwrap();
        let phi_h = Lstm::take(&mut it);
        let phi_u = Lstm::take(&mut it);
        let mut next = || it.next().unwrap();
        Ok(Params { message, w_alpha, phi_h, phi_u, w_fc: next(), b_fc: next(), w_cls: next(), b_cls: next() })
    }
}

/// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` draws for every parameter, in order.
pub(crate) fn init_tensors(specs: &[ParamSpec], seed: u64) -> Vec<Tensor> {
    let mut rng = crate::rng::stream(seed, crate::rng::INIT);
    specs
        .iter()
        .map(|s| {
            let bound = 1.0 / (s.fan_in as f64).sqrt();
            let data = (0..s.shape[0] * s.shape[1]).map(|_| rng.random_range(-bound..bound)).collect();
            Tensor::from_parts(s.shape[0], s.shape[1], data)
        })
        .collect()
}

/// Checks tensors against a layout by count and shape.
pub(crate) fn check_layout(specs: &[ParamSpec], tensors: &[&Tensor]) -> Result<()> {
    if specs.len() != tensors.len() {
        return Err(Error::invalid(format!("expected {} tensors, got {}", specs.len(), tensors.len())));
    }
    for (s, t) in specs.iter().zip(tensors) {
        if t.shape() != s.shape {
            return Err(Error::shape(
                "parameters",
                format!("{} is {:?}, expected {:?}", s.name, t.shape(), s.shape),
            ));
        }
    }
    Ok(())
}

/// One observed sequence: recognition rows, their graph and the event
/// observed at each segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub frame: RecognitionFrame,
    pub graph: EvoStateGraph,
    pub events: Vec<u8>,
}

impl Sequence {
    pub fn new(frame: RecognitionFrame, events: Vec<u8>) -> Result<Self> {
        if events.len() != frame.num_segments() {
            return Err(Error::invalid(format!(
                "{} events for {} segments",
                events.len(),
                frame.num_segments()
            )));
        }
        if events.iter().any(|&y| y > 1) {
            return Err(Error::invalid("events must be 0 or 1"));
        }
        let graph = build_graph_sequence(&frame)?;
        Ok(Sequence { frame, graph, events })
    }

    /// One step per snapshot. Step `k` consumes snapshot `k` and the event of
    /// segment `k + 1`, and predicts the event of segment `k + 2`.
    pub fn num_steps(&self) -> usize {
        self.graph.len()
    }
}

/// Per-step outputs of one unrolled sequence.
#[derive(Clone, Debug)]
pub struct Forward {
    /// `1 x 2` class probabilities after each step.
    pub probs: Vec<Var>,
    /// Attention value at each step; empty for models without attention.
    pub alphas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Probability of an event after each step; the last entry is the
    /// prediction for the segment following the sequence.
    pub positive: Vec<f64>,
    pub alphas: Vec<f64>,
}

/// What the training loop needs from a network.
pub trait SequenceModel {
    fn config(&self) -> &EvoNetConfig;
    fn layout(&self) -> Vec<ParamSpec>;
    fn parameters(&self) -> Vec<&Tensor>;
    fn parameters_mut(&mut self) -> Vec<&mut Tensor>;
    /// Unrolls over `seq` with the parameters bound as `params` (layout order).
    fn forward(&self, tape: &mut Tape, params: &[Var], seq: &Sequence) -> Result<Forward>;

    fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.parameters()
            .into_iter()
            .map(|t| if trainable { tape.param(t.clone()) } else { tape.constant(t.clone()) })
            .collect()
    }

    fn predict(&self, seq: &Sequence) -> Result<Prediction> {
        let mut tape = Tape::new();
        let params = self.bind(&mut tape, false);
        let out = self.forward(&mut tape, &params, seq)?;
        let positive = out.probs.iter().map(|&p| tape.value(p).get(0, 1)).collect();
        Ok(Prediction { positive, alphas: out.alphas })
    }
}

fn check_snapshot(op: &'static str, m: &Tensor, h: &[usize; 2]) -> Result<()> {
    if m.rows() != m.cols() || m.rows() != h[0] {
        return Err(Error::shape(
            op,
            format!("snapshot {}x{} against {} node rows", m.rows(), m.cols(), h[0]),
        ));
    }
    Ok(())
}

/// `H_v = sum over v' of m(v' -> v) * h_v'`, i.e. `H = M^T h`.
pub fn message_pool(tape: &mut Tape, m: &Tensor, h: Var) -> Result<Var> {
    check_snapshot("message_pool", m, &tape.shape(h))?;
    let mt = tape.constant(m.transpose());
    tape.matmul(mt, h)
}

/// `H = (M h) W_in + (M^T h) W_out + b`, with `M_in = M` and `M_out = M^T`
/// and the bias added once per node.
pub fn message_ggnn(tape: &mut Tape, m: &Tensor, h: Var, w_in: Var, w_out: Var, b: Var) -> Result<Var> {
    check_snapshot("message_ggnn", m, &tape.shape(h))?;
    let m_in = tape.constant(m.clone());
    let m_out = tape.constant(m.transpose());
    let a_in = tape.matmul(m_in, h)?;
    let a_out = tape.matmul(m_out, h)?;
    let p_in = tape.matmul(a_in, w_in)?;
    let p_out = tape.matmul(a_out, w_out)?;
    let sum = tape.add(p_in, p_out)?;
    tape.add(sum, b)
}

/// Attention-weighted pooling. The neighbours of `v` are the `v'` with
/// `m(v' -> v) >= epsilon`; their scores `LeakyReLU(w . (h_v ++ h_v'))` are
/// softmax-normalised, multiplied into the edge weights, and pooled. Nodes
/// without neighbours receive zeros.
pub fn message_gat(tape: &mut Tape, m: &Tensor, h: Var, w: Var, epsilon: f64) -> Result<Var> {
    let [n, hd] = tape.shape(h);
    check_snapshot("message_gat", m, &[n, hd])?;
    if tape.shape(w) != [2 * hd, 1] {
        return Err(Error::shape("message_gat", format!("weight {:?} for node size {hd}", tape.shape(w))));
    }
    let mut first = Tensor::zeros(hd, 2 * hd);
    let mut second = Tensor::zeros(hd, 2 * hd);
    for i in 0..hd {
        first.set(i, i, 1.0);
        second.set(i, hd + i, 1.0);
    }
    let first = tape.constant(first);
    let second = tape.constant(second);
    let w_recv = tape.matmul(first, w)?;
    let w_send = tape.matmul(second, w)?;
    let s_recv = tape.matmul(h, w_recv)?;
    let s_send = tape.matmul(h, w_send)?;
    let s_send = tape.transpose(s_send)?;
    let scores = tape.add(s_recv, s_send)?;
    let scores = tape.leaky_relu(scores, LEAKY_SLOPE)?;
    let mask = (0..n).flat_map(|v| (0..n).map(move |u| (v, u))).map(|(v, u)| m.get(u, v) >= epsilon).collect();
    let coeff = tape.masked_softmax_rows(scores, mask)?;
    let mt = tape.constant(m.transpose());
    let weights = tape.mul(coeff, mt)?;
    tape.matmul(weights, h)
}

/// `alpha = logistic((U ++ sum_v H_v) . w_alpha)`.
pub fn attention_score(tape: &mut Tape, u: Var, big_h: Var, w_alpha: Var) -> Result<Var> {
    let pooled = tape.sum_axis(big_h, 0)?;
    let z = tape.concat(&[u, pooled], 1)?;
    let logit = tape.matmul(z, w_alpha)?;
    tape.sigmoid(logit)
}

/// One LSTM update for every row of `input` in parallel.
pub fn lstm_cell(tape: &mut Tape, p: &Lstm<Var>, h_prev: Var, c_prev: Var, input: Var) -> Result<(Var, Var)> {
    let x = tape.concat(&[h_prev, input], 1)?;
    let gate = |tape: &mut Tape, w: Var, b: Var| -> Result<Var> {
        let z = tape.matmul(x, w)?;
        tape.add(z, b)
    };
    let f = gate(tape, p.w_f, p.b_f)?;
    let f = tape.sigmoid(f)?;
    let i = gate(tape, p.w_i, p.b_i)?;
    let i = tape.sigmoid(i)?;
    let g = gate(tape, p.w_c, p.b_c)?;
    let g = tape.tanh(g)?;
    let o = gate(tape, p.w_o, p.b_o)?;
    let o = tape.sigmoid(o)?;
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let squashed = tape.tanh(c)?;
    let h = tape.mul(o, squashed)?;
    Ok((h, c))
}

/// Node states, graph vector and both LSTM memories.
#[derive(Clone, Copy, Debug)]
pub struct BlockState {
    pub h: Var,
    pub c_h: Var,
    pub u: Var,
    pub c_u: Var,
}

impl BlockState {
    /// `h` starts at the state patterns, everything else at zero.
    pub fn initial(tape: &mut Tape, states: &Tensor, u_size: usize) -> Self {
        let [n, hd] = states.shape();
        BlockState {
            h: tape.constant(states.clone()),
            c_h: tape.constant(Tensor::zeros(n, hd)),
            u: tape.constant(Tensor::zeros(1, u_size)),
            c_u: tape.constant(Tensor::zeros(1, u_size)),
        }
    }
}

/// One recurrent step on snapshot `m` with the observed event `y`.
/// Returns the new state and the attention value (1 when disabled).
pub fn evoblock_step(
    tape: &mut Tape,
    p: &Params<Var>,
    config: &EvoNetConfig,
    m: &Tensor,
    y: u8,
    state: &BlockState,
) -> Result<(BlockState, Var)> {
    if y > 1 {
        return Err(Error::invalid("event must be 0 or 1"));
    }
    let big_h = match &p.message {
        Message::Pool => message_pool(tape, m, state.h)?,
        Message::Ggnn { w_in, w_out, b } => message_ggnn(tape, m, state.h, *w_in, *w_out, *b)?,
        Message::Gat { w } => message_gat(tape, m, state.h, *w, config.gat_epsilon)?,
    };
    let alpha = if config.attention_enabled {
        attention_score(tape, state.u, big_h, p.w_alpha)?
    } else {
        tape.constant(Tensor::ones(1, 1))
    };

    let n = tape.shape(state.h)[0];
    let scaled_u = tape.mul(state.u, alpha)?;
    let ones = tape.constant(Tensor::ones(n, 1));
    let u_rows = tape.matmul(ones, scaled_u)?;
    let node_in = tape.concat(&[big_h, u_rows], 1)?;
    let (h, c_h) = lstm_cell(tape, &p.phi_h, state.h, state.c_h, node_in)?;

    let pooled = tape.sum_axis(h, 0)?;
    let scaled_h = tape.mul(pooled, alpha)?;
    let event = tape.constant(Tensor::from_parts(1, 1, vec![f64::from(y)]));
    let graph_in = tape.concat(&[event, scaled_h], 1)?;
    let (u, c_u) = lstm_cell(tape, &p.phi_u, state.u, state.c_u, graph_in)?;
    Ok((BlockState { h, c_h, u, c_u }, alpha))
}

/// `softmax(tanh((U ++ sum_v h_v) W_fc + b_fc) W_cls + b_cls)`.
pub fn readout(tape: &mut Tape, p: &Params<Var>, u: Var, h: Var) -> Result<Var> {
    let pooled = tape.sum_axis(h, 0)?;
    let z = tape.concat(&[u, pooled], 1)?;
    classify(tape, z, p.w_fc, p.b_fc, p.w_cls, p.b_cls)
}

pub(crate) fn classify(tape: &mut Tape, z: Var, w_fc: Var, b_fc: Var, w_cls: Var, b_cls: Var) -> Result<Var> {
    let hidden = tape.matmul(z, w_fc)?;
    let hidden = tape.add(hidden, b_fc)?;
    let hidden = tape.tanh(hidden)?;
    let logits = tape.matmul(hidden, w_cls)?;
    let logits = tape.add(logits, b_cls)?;
    tape.softmax(logits, 1)
}

/// Full network: parameters plus the state patterns that seed `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvoNet {
    pub config: EvoNetConfig,
    pub params: EvoNetParams,
    /// `|V| x |h|` flattened state patterns.
    pub states: Tensor,
}

impl EvoNet {
    pub fn new(config: EvoNetConfig, states: Tensor, seed: u64) -> Result<Self> {
        config.validate()?;
        let tensors = init_tensors(&Params::<Tensor>::layout(&config), seed);
        let params = Params::from_flat(config.message_kind, tensors)?;
        Self::from_parts(config, params, states)
    }

    pub fn from_parts(config: EvoNetConfig, params: EvoNetParams, states: Tensor) -> Result<Self> {
        config.validate()?;
        if states.shape() != [config.num_states, config.node_size()] {
            return Err(Error::shape(
                "EvoNet",
                format!(
                    "states are {:?}, expected [{}, {}]",
                    states.shape(),
                    config.num_states,
                    config.node_size()
                ),
            ));
        }
        check_layout(&Params::<Tensor>::layout(&config), &params.flat())?;
        Ok(EvoNet { config, params, states })
    }

    /// Unrolls with explicit parameter handles, exposing the final state.
    pub fn unroll(&self, tape: &mut Tape, p: &Params<Var>, seq: &Sequence) -> Result<(Forward, BlockState)> {
        if seq.graph.num_states != self.config.num_states {
            return Err(Error::shape(
                "EvoNet",
                format!("sequence has {} states, model {}", seq.graph.num_states, self.config.num_states),
            ));
        }
        let mut state = BlockState::initial(tape, &self.states, self.config.u_size);
        let mut probs = Vec::with_capacity(seq.num_steps());
        let mut alphas = Vec::with_capacity(seq.num_steps());
        for (k, m) in seq.graph.snapshots.iter().enumerate() {
            let (next, alpha) = evoblock_step(tape, p, &self.config, m, seq.events[k + 1], &state)?;
            state = next;
            alphas.push(tape.value(alpha).get(0, 0));
            probs.push(readout(tape, p, state.u, state.h)?);
        }
        Ok((Forward { probs, alphas }, state))
    }
}

impl SequenceModel for EvoNet {
    fn config(&self) -> &EvoNetConfig {
        &self.config
    }

    fn layout(&self) -> Vec<ParamSpec> {
        Params::<Tensor>::layout(&self.config)
    }

    fn parameters(&self) -> Vec<&Tensor> {
        self.params.flat()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.params.flat_mut()
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], seq: &Sequence) -> Result<Forward> {
        let p = Params::from_flat(self.config.message_kind, params.to_vec())?;
        Ok(self.unroll(tape, &p, seq)?.0)
    }
}

/// Softmax over time of the attention logits, for display only.
pub fn renormalize_attention(alphas: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let a = a.clamp(1e-12, 1.0 - 1e-12);
            (a / (1.0 - a)).ln()
        })
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}
