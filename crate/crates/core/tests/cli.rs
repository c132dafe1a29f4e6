use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn disagg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disagg"))
        .args(args)
        .current_dir(dir)
        .env_remove("DISAGG_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = disagg(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn corpus(dir: &Path) {
    ok(dir, &["synth", "--homes", "4", "--days", "7", "--out", "corpus"]);
}

#[test]
fn synth_then_occupancy_gives_one_row_per_home_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    ok(
        dir.path(),
        &["occupancy", "--manifest", "corpus/manifest.json", "--algo", "ours,chen", "--out", "results.json"],
    );
    let doc = read_json(&dir.path().join("results.json"));
    assert_eq!(doc["tool"], "disagg");
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    let rows = doc["results"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let ids: Vec<&str> = rows.iter().map(|r| r["home_id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    let table = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(table.lines().count(), 9);
}

#[test]
fn report_renders_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    ok(
        dir.path(),
        &["occupancy", "--manifest", "corpus/manifest.json", "--algo", "ours,chen-median", "--out", "occ.json"],
    );
    ok(dir.path(), &["report", "--input", "occ.json", "--out", "figs"]);
    let mut seen = 0;
    for entry in std::fs::read_dir(dir.path().join("figs")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        seen += 1;
    }
    assert_eq!(seen, 2);
}

#[test]
fn disaggregate_writes_traces_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    ok(
        dir.path(),
        &["disaggregate", "--manifest", "corpus/manifest.json", "--algo", "fhmm", "--train-split", "0.5", "--out", "tr"],
    );
    let home = dir.path().join("tr/home_00");
    for name in ["fridge", "hvac", "other", "residual"] {
        assert!(home.join(format!("{name}.csv")).exists(), "{name}");
    }
    let doc = read_json(&dir.path().join("tr/metrics.json"));
    assert_eq!(doc["config"]["disagg"]["train_fraction"], 0.5);
    assert_eq!(doc["results"].as_array().unwrap().len(), 12);
    ok(dir.path(), &["report", "--input", "tr/metrics.json", "--out", "figs"]);
}

#[test]
fn features_and_detect_events_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    ok(
        dir.path(),
        &["features", "--manifest", "corpus/manifest.json", "--source", "aggregate-only", "--out", "f.csv"],
    );
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("home_id,agg.mean_total"));
    assert_eq!(text.lines().count(), 5);
    assert!(dir.path().join("f.json").exists());

    ok(dir.path(), &["detect-events", "--input", "corpus/home_01/aggregate.csv", "--out", "ev"]);
    let pairs = std::fs::read_to_string(dir.path().join("ev/pairs.csv")).unwrap();
    assert_eq!(pairs.lines().next().unwrap(), "on_time,off_time,magnitude_w");
    assert!(pairs.lines().count() > 10);
    let events = std::fs::read_to_string(dir.path().join("ev/events.csv")).unwrap();
    assert_eq!(events.lines().next().unwrap(), "time,delta_w");
}

#[test]
fn inputs_are_left_untouched() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let manifest = std::fs::read(dir.path().join("corpus/manifest.json")).unwrap();
    let agg = std::fs::read(dir.path().join("corpus/home_00/aggregate.csv")).unwrap();
    ok(
        dir.path(),
        &["occupancy", "--manifest", "corpus/manifest.json", "--algo", "ours", "--out", "o.json"],
    );
    ok(dir.path(), &["disaggregate", "--manifest", "corpus/manifest.json", "--algo", "hart", "--out", "tr"]);
    assert_eq!(std::fs::read(dir.path().join("corpus/manifest.json")).unwrap(), manifest);
    assert_eq!(std::fs::read(dir.path().join("corpus/home_00/aggregate.csv")).unwrap(), agg);
}

#[test]
fn seed_precedence_is_flag_then_file_then_env() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    std::fs::write(dir.path().join("cfg.json"), r#"{"seed": 11, "occupancy": {"knn_k": 3}}"#).unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut args = vec!["occupancy", "--manifest", "corpus/manifest.json", "--algo", "ours", "--out", "o.json"];
        args.extend_from_slice(extra);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_disagg"));
        cmd.args(&args).current_dir(dir.path()).env_remove("DISAGG_SEED");
        if let Some(v) = env {
            cmd.env("DISAGG_SEED", v);
        }
        assert!(cmd.output().unwrap().status.success());
        read_json(&dir.path().join("o.json"))
    };
    assert_eq!(run(&[], None)["seed"], 7);
    assert_eq!(run(&[], Some("21"))["seed"], 21);
    let from_file = run(&["--config", "cfg.json"], Some("21"));
    assert_eq!(from_file["seed"], 11);
    assert_eq!(from_file["config"]["occupancy"]["knn_k"], 3);
    assert_eq!(run(&["--config", "cfg.json", "--seed", "5"], Some("21"))["seed"], 5);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = disagg(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = disagg(dir.path(), &["occupancy", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failure_prints_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = disagg(dir.path(), &["occupancy", "--manifest", "missing.json", "--out", "o.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let record: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(record["error"]["kind"], "io");
    assert!(record["error"]["message"].as_str().unwrap().contains("missing.json"));

    std::fs::write(dir.path().join("bad.json"), r#"{"sed": 1}"#).unwrap();
    let out = disagg(dir.path(), &["--config", "bad.json", "synth", "--out", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}
