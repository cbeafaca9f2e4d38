use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evonet::graph::{
    build_graph_sequence, export, from_json as graph_from_json, graph_stats, Exportable, ExportFormat,
    DEFAULT_DAMPING, DEFAULT_EPSILON, DEFAULT_TOLERANCE,
};
use evonet::io::{atomic_write, load_csv, read_to_string, synth_generate, RunConfig};
use evonet::model::{load_model, save_model, MessageKind, ModelKind, SequenceModel};
use evonet::pipeline::{evaluate_stage, fit_states, series_from_records, states_path, train_stage};
use evonet::recognition::{recognition_weights, segment, RecognizerKind, Series, StateModel};
use evonet::train::{evonet_grad_check, group_errors, sequence_from_series};
use evonet::Error;

#[derive(Parser)]
#[command(name = "evonet", version, about = "Event prediction from evolutionary state graphs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Run settings shared by every subcommand. Flags override the config file.
#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tau: Option<usize>,
    #[arg(long, global = true)]
    num_states: Option<usize>,
    #[arg(long, global = true)]
    recognizer: Option<RecognizerKind>,
    #[arg(long, global = true)]
    message_kind: Option<MessageKind>,
    #[arg(long, global = true)]
    attention: Option<bool>,
    #[arg(long, global = true)]
    u_size: Option<usize>,
    #[arg(long, global = true)]
    hg_size: Option<usize>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Cut every series into segments (JSON).
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Learn state patterns from every segment of a dataset.
    FitStates {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build the graph of one series (JSON graph document).
    BuildGraph {
        #[arg(long)]
        input: PathBuf,
        /// State patterns from `fit-states`; fitted on the input when absent.
        #[arg(long)]
        states: Option<PathBuf>,
        /// Series to use; defaults to the first one.
        #[arg(long)]
        series: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-snapshot betweenness, closeness, pagerank and in-degree.
    GraphStats {
        /// JSON graph document.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_DAMPING)]
        damping: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a graph (or one snapshot) as DOT or JSON.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "dot")]
        format: ExportFormat,
        /// Snapshot index, starting at 1; all snapshots when absent.
        #[arg(long)]
        snapshot: Option<usize>,
        /// Edges lighter than this are omitted.
        #[arg(long, default_value_t = 0.0)]
        edge_threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit states and train a model on the chronological split.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Checkpoint path; the states go to `<stem>.states.json` beside it.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Evonet)]
        model: Kind,
        /// Loss curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Score a checkpoint on the held-out split (metrics JSON).
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        states: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Probability of an event after the last segment of every series.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        states: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate the synthetic benchmark (CSV plus sidecar JSON).
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        num_series: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Finite-difference check of the full network's gradients.
    GradCheck {
        #[arg(long, default_value = "ggnn")]
        kind: MessageKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Evonet,
    Wog,
}

/// Exit code 1 for bad input, 2 for failures while running.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Diverged { .. } | Error::NonFinite { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(c: &Common) -> evonet::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
        cfg.train.seed = v;
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = c.$flag { cfg.$($field).+ = v; })*
        };
    }
    set!(
        tau => tau,
        num_states => num_states,
        recognizer => recognizer,
        message_kind => message_kind,
        attention => attention_enabled,
        u_size => u_size,
        hg_size => hg_size,
        iterations => train.iterations,
        batch_size => train.batch_size,
        learning_rate => train.learning_rate,
        threshold => threshold,
    );
    cfg.validate()?;
    Ok(cfg)
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> evonet::Result<()> {
    match path {
        Some(p) => atomic_write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> evonet::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load_series(path: &Path, tau: usize) -> evonet::Result<Vec<Series>> {
    series_from_records(&load_csv(path)?, tau)
}

fn load_states(path: &Path) -> evonet::Result<StateModel> {
    StateModel::from_json(&read_to_string(path)?)
}

#[derive(Serialize)]
struct SegmentDoc {
    version: u32,
    tau: usize,
    series: Vec<SeriesSegments>,
}

#[derive(Serialize)]
struct SeriesSegments {
    id: String,
    start: i64,
    /// Each segment flattened time-major.
    segments: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u8>>,
}

#[derive(Serialize)]
struct PredictionDoc {
    version: u32,
    predictions: Vec<PredictionRow>,
}

#[derive(Serialize)]
struct PredictionRow {
    id: String,
    probability: f64,
    alphas: Vec<f64>,
}

fn run(cli: Cli) -> evonet::Result<u8> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Segment { input, output } => {
            let series = load_series(&input, cfg.tau)?;
            let mut out = Vec::with_capacity(series.len());
            for s in &series {
                let segments = segment(s)?.iter().map(|t| t.data().to_vec()).collect();
                out.push(SeriesSegments { id: s.id.clone(), start: s.start, segments, labels: s.labels.clone() });
            }
            emit(output.as_deref(), &json(&SegmentDoc { version: 1, tau: cfg.tau, series: out })?)?;
        }
        Command::FitStates { input, output } => {
            let states = fit_states(&load_series(&input, cfg.tau)?, &cfg)?;
            atomic_write(&output, (states.to_json()? + "\n").as_bytes())?;
        }
        Command::BuildGraph { input, states, series, output } => {
            let all = load_series(&input, cfg.tau)?;
            let chosen = match &series {
                Some(id) => all.iter().find(|s| &s.id == id).ok_or_else(|| Error::Invalid(format!("no series '{id}'")))?,
                None => all.first().ok_or_else(|| Error::Invalid("input holds no series".into()))?,
            };
            if chosen.num_segments() < 2 {
                return Err(Error::TooFewSegments(chosen.num_segments()));
            }
            let states = match states {
                Some(p) => load_states(&p)?,
                None => fit_states(&all, &cfg)?,
            };
            let graph = build_graph_sequence(&recognition_weights(&segment(chosen)?, &states)?)?;
            emit(output.as_deref(), &export(Exportable::Graph(&graph), ExportFormat::Json, 0.0)?)?;
        }
        Command::GraphStats { input, epsilon, damping, output } => {
            let graph = graph_from_json(&read_to_string(&input)?)?;
            let stats = graph_stats(&graph, epsilon, damping, DEFAULT_TOLERANCE)?;
            emit(output.as_deref(), &json(&stats)?)?;
        }
        Command::Export { input, format, snapshot, edge_threshold, output } => {
            let graph = graph_from_json(&read_to_string(&input)?)?;
            let text = match snapshot {
                Some(t) => {
                    let m = t
                        .checked_sub(1)
                        .and_then(|i| graph.snapshots.get(i))
                        .ok_or_else(|| Error::Invalid(format!("snapshot {t} out of range 1..={}", graph.len())))?;
                    export(Exportable::Snapshot { t, m }, format, edge_threshold)?
                }
                None => export(Exportable::Graph(&graph), format, edge_threshold)?,
            };
            emit(output.as_deref(), &text)?;
        }
        Command::Train { input, output, model, curve } => {
            let kind = match model {
                Kind::Evonet => ModelKind::Evonet,
                Kind::Wog => ModelKind::Wog,
            };
            let outcome = train_stage(&load_series(&input, cfg.tau)?, &cfg, kind)?;
            save_model(&outcome.model, &output)?;
            atomic_write(&states_path(&output), (outcome.states.to_json()? + "\n").as_bytes())?;
            if let Some(p) = curve {
                atomic_write(&p, outcome.report.curve_csv().as_bytes())?;
            }
            eprintln!(
                "best validation loss {:.6} at iteration {}",
                outcome.report.best_val_loss, outcome.report.best_iteration
            );
        }
        Command::Evaluate { input, model, states, output } => {
            let states = load_states(&states.unwrap_or_else(|| states_path(&model)))?;
            let net = load_model(&model, None)?;
            let metrics = evaluate_stage(&load_series(&input, cfg.tau)?, &states, &net, cfg.threshold)?;
            emit(output.as_deref(), &metrics.to_json()?)?;
        }
        Command::Predict { input, model, states, output } => {
            let states = load_states(&states.unwrap_or_else(|| states_path(&model)))?;
            let net = load_model(&model, None)?;
            let mut predictions = Vec::new();
            for s in load_series(&input, cfg.tau)? {
                let p = net.predict(&sequence_from_series(&s, &states)?)?;
                let probability = *p.positive.last().ok_or_else(|| Error::Invalid(format!("series {} has no steps", s.id)))?;
                predictions.push(PredictionRow { id: s.id, probability, alphas: p.alphas });
            }
            emit(output.as_deref(), &json(&PredictionDoc { version: 1, predictions })?)?;
        }
        Command::Synth { output, num_series, noise } => {
            let mut synth = cfg.synth.clone();
            synth.tau = cfg.tau;
            synth.num_series = num_series.unwrap_or(synth.num_series);
            synth.noise = noise.unwrap_or(synth.noise);
            synth_generate(&synth, cfg.seed)?.save(&output)?;
        }
        Command::GradCheck { kind } => {
            let report = evonet_grad_check(cfg.seed, kind)?;
            for (group, err) in group_errors(&report) {
                println!("{group:<12} {err:.3e}");
            }
            println!("max relative error {:.3e} over {} entries", report.max_relative_error, report.entries_checked);
            if !report.passed() {
                eprintln!("gradient check failed: tolerance {:.0e}", report.tolerance);
                return Ok(2);
            }
        }
    }
    Ok(0)
}
