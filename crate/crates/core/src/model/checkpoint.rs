//! Versioned JSON checkpoints.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvoNet, EvoNetConfig, Forward, ParamSpec, Params, Sequence, SequenceModel, WogNet};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Evonet,
    Wog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelKind,
    pub config: EvoNetConfig,
    /// Seed node states; absent for the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Tensor>,
    pub tensors: BTreeMap<String, Tensor>,
}

/// Either trained network.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    EvoNet(EvoNet),
    Wog(WogNet),
}

impl AnyModel {
    fn inner(&self) -> &dyn SequenceModel {
        match self {
            AnyModel::EvoNet(m) => m,
            AnyModel::Wog(m) => m,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (model, states) = match self {
            AnyModel::EvoNet(m) => (ModelKind::Evonet, Some(m.states.clone())),
            AnyModel::Wog(_) => (ModelKind::Wog, None),
        };
        let inner = self.inner();
        let tensors = inner
            .layout()
            .into_iter()
            .zip(inner.parameters())
            .map(|(ps, t)| (ps.name, t.clone()))
            .collect();
        Checkpoint { version: CHECKPOINT_VERSION, model, config: inner.config().clone(), states, tensors }
    }

    /// Rebuilds a model. With `expected`, any config difference is an error.
    pub fn from_checkpoint(ck: Checkpoint, expected: Option<&EvoNetConfig>) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", ck.version)));
        }
        if let Some(cfg) = expected {
            if cfg != &ck.config {
                return Err(Error::Checkpoint(format!(
                    "config mismatch: checkpoint has {:?}, expected {:?}",
                    ck.config, cfg
                )));
            }
        }
        ck.config.validate()?;
        let layout = match ck.model {
            ModelKind::Evonet => Params::<Tensor>::layout(&ck.config),
            ModelKind::Wog => WogNet::layout_for(&ck.config),
        };
        let mut tensors = ck.tensors;
        let ordered = take_in_order(&layout, &mut tensors)?;
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::Checkpoint(format!("unexpected tensor '{extra}'")));
        }
        match ck.model {
            ModelKind::Evonet => {
                let states = ck.states.ok_or_else(|| Error::Checkpoint("missing node states".into()))?;
                let params = Params::from_flat(ck.config.message_kind, ordered)?;
                Ok(AnyModel::EvoNet(EvoNet::from_parts(ck.config, params, states)?))
            }
            ModelKind::Wog => Ok(AnyModel::Wog(WogNet::from_parts(ck.config, ordered)?)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_checkpoint())?)
    }

    pub fn from_json(text: &str, expected: Option<&EvoNetConfig>) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))?;
        Self::from_checkpoint(ck, expected)
    }
}

fn take_in_order(layout: &[ParamSpec], tensors: &mut BTreeMap<String, Tensor>) -> Result<Vec<Tensor>> {
    layout
        .iter()
        .map(|ps| {
            let t = tensors
                .remove(&ps.name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor '{}'", ps.name)))?;
            if t.shape() != ps.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor '{}' is {:?}, expected {:?}",
                    ps.name,
                    t.shape(),
                    ps.shape
                )));
            }
            Ok(t)
        })
        .collect()
}

impl SequenceModel for AnyModel {
    fn config(&self) -> &EvoNetConfig {
        self.inner().config()
    }

    fn layout(&self) -> Vec<ParamSpec> {
        self.inner().layout()
    }

    fn parameters(&self) -> Vec<&Tensor> {
        self.inner().parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            AnyModel::EvoNet(m) => m.parameters_mut(),
            AnyModel::Wog(m) => m.parameters_mut(),
        }
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], seq: &Sequence) -> Result<Forward> {
        self.inner().forward(tape, params, seq)
    }
}

pub fn save_model(model: &AnyModel, path: &Path) -> Result<()> {
    crate::io::atomic_write(path, model.to_json()?.as_bytes())
}

pub fn load_model(path: &Path, expected: Option<&EvoNetConfig>) -> Result<AnyModel> {
    AnyModel::from_json(&crate::io::read_to_string(path)?, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MessageKind;

    fn net(kind: MessageKind) -> AnyModel {
        let cfg = EvoNetConfig { u_size: 3, hg_size: 2, message_kind: kind, ..EvoNetConfig::new(2, 2, 1) };
        AnyModel::EvoNet(EvoNet::new(cfg, Tensor::from_rows(&[vec![0.1, 0.9], vec![-0.4, 0.3]]).unwrap(), 4).unwrap())
    }

    #[test]
    fn json_round_trip_is_exact() {
        for kind in [MessageKind::Pool, MessageKind::Ggnn, MessageKind::Gat] {
            let m = net(kind);
            assert_eq!(AnyModel::from_json(&m.to_json().unwrap(), None).unwrap(), m);
        }
        let wog = AnyModel::Wog(WogNet::new(EvoNetConfig::new(3, 2, 1), 1).unwrap());
        assert_eq!(AnyModel::from_json(&wog.to_json().unwrap(), None).unwrap(), wog);
    }

    #[test]
    fn mismatches_and_truncation_are_rejected() {
        let m = net(MessageKind::Ggnn);
        let text = m.to_json().unwrap();
        let mut other = m.config().clone();
        other.u_size = 4;
        assert!(matches!(AnyModel::from_json(&text, Some(&other)), Err(Error::Checkpoint(_))));
        assert!(matches!(AnyModel::from_json(&text[..text.len() / 2], None), Err(Error::Checkpoint(_))));
        let bumped = text.replacen("\"version\":1", "\"version\":2", 1);
        assert!(AnyModel::from_json(&bumped, None).is_err());
        let renamed = text.replacen("phi_h.w_f", "phi_h.w_x", 1);
        assert!(AnyModel::from_json(&renamed, None).is_err());
    }
}
