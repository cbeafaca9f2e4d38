//! The graph-free ablation: an LSTM over one-hot most-likely states.

use super::{check_layout, classify, init_tensors, lstm_cell, EvoNetConfig, Forward, Lstm, ParamSpec, Sequence, SequenceModel};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sees only the argmax state of each segment. Events are not fed back.
#[derive(Clone, Debug, PartialEq)]
pub struct WogNet {
    pub config: EvoNetConfig,
    /// Layout order: LSTM gates, `readout.w_fc`, `readout.b_fc`,
    /// `classifier.w`, `classifier.b`.
    pub tensors: Vec<Tensor>,
}

impl WogNet {
    pub fn layout_for(config: &EvoNetConfig) -> Vec<ParamSpec> {
        let (n, u, hg) = (config.num_states, config.u_size, config.hg_size);
        let mut out = Vec::new();
        Lstm::<Tensor>::layout("lstm", n, u, &mut out);
        out.push(ParamSpec::new("readout.w_fc".into(), u, hg, u));
        out.push(ParamSpec::new("readout.b_fc".into(), 1, hg, u));
        out.push(ParamSpec::new("classifier.w".into(), hg, 2, hg));
        out.push(ParamSpec::new("classifier.b".into(), 1, 2, hg));
        out
    }

    pub fn new(config: EvoNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let tensors = init_tensors(&Self::layout_for(&config), seed);
        Ok(WogNet { config, tensors })
    }

    pub fn from_parts(config: EvoNetConfig, tensors: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        check_layout(&Self::layout_for(&config), &tensors.iter().collect::<Vec<_>>())?;
        Ok(WogNet { config, tensors })
    }
}

impl SequenceModel for WogNet {
    fn config(&self) -> &EvoNetConfig {
        &self.config
    }

    fn layout(&self) -> Vec<ParamSpec> {
        Self::layout_for(&self.config)
    }

    fn parameters(&self) -> Vec<&Tensor> {
        self.tensors.iter().collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.tensors.iter_mut().collect()
    }

    /// Consumes segment `j` at position `j`; from the second segment on, each
    /// position emits a prediction, aligned with the graph model's steps.
    fn forward(&self, tape: &mut Tape, params: &[Var], seq: &Sequence) -> Result<Forward> {
        let n = self.config.num_states;
        if seq.frame.num_states() != n {
            return Err(Error::shape("WogNet", format!("sequence has {} states, model {n}", seq.frame.num_states())));
        }
        if params.len() != 12 {
            return Err(Error::invalid(format!("baseline needs 12 parameter tensors, got {}", params.len())));
        }
        let mut it = params.iter().copied();
        let lstm = Lstm::take(&mut it);
        let (w_fc, b_fc, w_cls, b_cls) = (params[8], params[9], params[10], params[11]);

        let u_size = self.config.u_size;
        let mut h = tape.constant(Tensor::zeros(1, u_size));
        let mut c = tape.constant(Tensor::zeros(1, u_size));
        let mut probs = Vec::with_capacity(seq.num_steps());
        for (j, state) in seq.frame.argmax().into_iter().enumerate() {
            let mut one_hot = Tensor::zeros(1, n);
            one_hot.set(0, state, 1.0);
            let x = tape.constant(one_hot);
            (h, c) = lstm_cell(tape, &lstm, h, c, x)?;
            if j >= 1 {
                probs.push(classify(tape, h, w_fc, b_fc, w_cls, b_cls)?);
            }
        }
        Ok(Forward { probs, alphas: Vec::new() })
    }
}
