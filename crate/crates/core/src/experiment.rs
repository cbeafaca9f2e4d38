//! The synthetic ablation: full network against the graph-free baseline on
//! data whose events are caused by one latent transition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{synth_generate, RunConfig, SynthData};
use crate::model::{EvoNet, SequenceModel};
use crate::pipeline::{build_samples, fit_states, series_from_records};
use crate::train::{baseline_wog, final_scores, train, TrainReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub run: RunConfig,
    /// Earliest series, used for states, training and validation.
    pub train_series: usize,
    /// Latest series, held out.
    pub test_series: usize,
}

impl AblationConfig {
    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.train_series < 2 || self.test_series == 0 {
            return Err(Error::invalid("ablation needs at least two training series and one test series"));
        }
        Ok(())
    }
}

/// Test-set outputs of one seed. Scores are final-step event probabilities.
#[derive(Clone, Debug)]
pub struct AblationRun {
    pub seed: u64,
    pub labels: Vec<u8>,
    pub evonet_scores: Vec<f64>,
    pub wog_scores: Vec<f64>,
    /// Attention per test sample and step.
    pub alphas: Vec<Vec<f64>>,
    /// Whether each step's snapshot spans the latent trigger transition.
    pub trigger_steps: Vec<Vec<bool>>,
    pub evonet_report: TrainReport,
    pub wog_report: TrainReport,
}

/// Generates data for `seed`, trains both models and scores the test series.
pub fn run_ablation(config: &AblationConfig, seed: u64) -> Result<AblationRun> {
    config.validate()?;
    let mut run = config.run.clone();
    run.seed = seed;
    run.train.seed = seed;
    run.synth.num_series = config.train_series + config.test_series;
    let data: SynthData = synth_generate(&run.synth, seed)?;
    let series = series_from_records(&data.records, run.tau)?;
    let (train_series, test_series) = series.split_at(config.train_series);

    let states = fit_states(train_series, &run)?;
    let pool = build_samples(train_series, &states)?;
    let test = build_samples(test_series, &states)?;
    let n_val = pool.len().div_ceil(10);
    let (fit, validation) = pool.split_at(pool.len() - n_val);

    let net_config = run.network(1);
    let mut net = EvoNet::new(net_config.clone(), states.pattern_matrix(), seed)?;
    let evonet_report = train(&mut net, fit, validation, &run.train)?;
    let (wog, wog_report) = baseline_wog(&net_config, fit, validation, &run.train)?;

    let trigger_steps = test
        .iter()
        .map(|s| {
            let idx = series_index(&data, &s.id)?;
            Ok((0..s.seq.num_steps()).map(|k| data.is_trigger_step(idx, k)).collect())
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    let alphas = test.iter().map(|s| Ok(net.predict(&s.seq)?.alphas)).collect::<Result<Vec<_>>>()?;
    Ok(AblationRun {
        seed,
        labels: test.iter().map(|s| s.target).collect(),
        evonet_scores: final_scores(&net, &test)?,
        wog_scores: final_scores(&wog, &test)?,
        alphas,
        trigger_steps,
        evonet_report,
        wog_report,
    })
}

fn series_index(data: &SynthData, id: &str) -> Result<usize> {
    data.records
        .iter()
        .position(|r| r.id == id)
        .ok_or_else(|| Error::invalid(format!("unknown series {id}")))
}
