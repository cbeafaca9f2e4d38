use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "u_size = 6\nhg_size = 5\n[train]\niterations = 2\nbatch_size = 4\n[synth]\nnum_series = 30\nsegments_per_series = 6\n";

fn evonet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evonet")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn pipeline(dir: &Path) -> Vec<u8> {
    std::fs::write(dir.join("run.toml"), SMALL).unwrap();
    let steps: [&[&str]; 3] = [
        &["synth", "--config", "run.toml", "--output", "data.csv"],
        &["train", "--config", "run.toml", "--input", "data.csv", "--output", "model.json", "--curve", "curve.csv"],
        &["evaluate", "--config", "run.toml", "--input", "data.csv", "--model", "model.json", "--output", "metrics.json"],
    ];
    for args in steps {
        let out = evonet(dir, args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    std::fs::read(dir.join("metrics.json")).unwrap()
}

#[test]
fn synth_train_evaluate_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let metrics = pipeline(a.path());
    assert_eq!(metrics, pipeline(b.path()));
    let doc: serde_json::Value = serde_json::from_slice(&metrics).unwrap();
    for key in ["version", "f1", "auc", "tp", "fp", "tn", "fn", "threshold"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    for file in ["data.csv", "data.sidecar.json", "model.json", "model.states.json", "curve.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let curve = std::fs::read_to_string(a.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("iteration,train_loss,val_loss,lr\n"));
    assert_eq!(curve.lines().count(), 3);
}

#[test]
fn graph_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), SMALL).unwrap();
    for args in [
        &["synth", "--config", "run.toml", "--output", "data.csv"][..],
        &["segment", "--input", "data.csv", "--output", "segments.json"],
        &["fit-states", "--input", "data.csv", "--output", "states.json"],
        &["build-graph", "--input", "data.csv", "--states", "states.json", "--series", "s00003", "--output", "g.json"],
        &["graph-stats", "--input", "g.json", "--output", "stats.json"],
        &["export", "--input", "g.json", "--format", "dot", "--output", "g.dot"],
        &["train", "--config", "run.toml", "--input", "data.csv", "--output", "m.json", "--model", "wog"],
        &["predict", "--config", "run.toml", "--input", "data.csv", "--model", "m.json", "--output", "p.json"],
    ] {
        let out = evonet(d, args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
    let graph: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("g.json")).unwrap()).unwrap();
    assert_eq!(graph["snapshots"].as_array().unwrap().len(), 5);
    let dot = std::fs::read_to_string(d.join("g.dot")).unwrap();
    assert_eq!(dot.matches("digraph").count(), 5);
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["version"], 1);
    let pr: f64 = stats["snapshots"][0]["pagerank"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((pr - 1.0).abs() < 1e-9);
    let preds: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(preds["predictions"].as_array().unwrap().len(), 30);
}

#[test]
fn one_segment_series_cannot_form_a_graph() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.csv"), "series_id,t,dim_0\na,0,0.5\na,1,0.25\n").unwrap();
    let out = evonet(dir.path(), &["build-graph", "--input", "one.csv", "--tau", "2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("T < 2"), "{}", stderr(&out));
}

#[test]
fn grad_check_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["pool", "ggnn", "gat"] {
        let out = evonet(dir.path(), &["grad-check", "--kind", kind]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let text = String::from_utf8_lossy(&out.stdout);
        let line = text.lines().find(|l| l.starts_with("max relative error")).unwrap();
        let value: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
        assert!(value < 1e-4);
    }
}

#[test]
fn usage_and_validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&evonet(d, &["train", "--no-such-flag"])), 1);
    assert_eq!(code(&evonet(d, &["no-such-command"])), 1);
    assert_eq!(code(&evonet(d, &[])), 1);
    std::fs::write(d.join("bad.toml"), "tau = 0\n").unwrap();
    assert_eq!(code(&evonet(d, &["grad-check", "--config", "bad.toml"])), 1);
    std::fs::write(d.join("bad.csv"), "series_id,t,dim_0,label\na,0,1.0,2\n").unwrap();
    let out = evonet(d, &["segment", "--input", "bad.csv", "--tau", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
    assert_eq!(code(&evonet(d, &["--help"])), 0);
}

#[test]
fn missing_files_are_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = evonet(dir.path(), &["segment", "--input", "absent.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.csv"));
}
