use std::path::Path;
use std::process::{Command, Output};

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpm-audit"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .env("CPM_AUDIT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cli(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails_with(dir: &Path, args: &[&str], code: i32, needle: &str) {
    let out = cli(dir, args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {stderr}");
    assert!(stderr.contains(needle), "{args:?}: `{needle}` not in {stderr}");
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Small data, a vanilla model and its predictions.
fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--members", "40", "--nonmembers", "80", "--dim", "4", "--seed", "1", "--out", "data.csv"]);
    ok(d, &["train", "--data", "data.csv", "--epochs", "10", "--out-model", "model.json", "--out-preds", "preds.csv"]);
    dir
}

#[test]
fn version_lists_format_versions() {
    let dir = tempfile::tempdir().unwrap();
    let v = ok(dir.path(), &["--version"]);
    assert!(v.contains("prediction-csv 1") && v.contains("report-json 1"), "{v}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = setup();
    let d = dir.path();
    fails_with(d, &["gen-data", "--classes", "1", "--out", "x.csv"], 2, "--classes");
    fails_with(d, &["train", "--data", "data.csv", "--method", "relaxloss", "--out-model", "m.json"], 2, "--alpha");
    fails_with(
        d,
        &["train", "--data", "data.csv", "--method", "relaxloss", "--alpha", "0.5", "--out-model", "m.json"],
        2,
        "--mu",
    );
    fails_with(d, &["audit", "--preds", "preds.csv", "--scores", "ce,bogus", "--out-report", "r.json"], 2, "bogus");
    fails_with(d, &["audit", "--preds", "preds.csv", "--scores", "relaxloss", "--out-report", "r.json"], 2, "--alpha");
    fails_with(d, &["ablate-k", "--preds", "preds.csv", "--k-list", "4,1", "--out-csv", "a.csv"], 2, "ascending");
    fails_with(d, &["cpm", "--preds", "preds.csv", "--k", "0", "--out-report", "r.json"], 2, "");
    fails_with(d, &["mixup-score", "--out-report", "r.json"], 2, "--data");
    fails_with(d, &["oracle", "--family", "convex"], 2, "");
    assert!(!d.join("r.json").exists());
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = setup();
    let d = dir.path();
    fails_with(d, &["audit", "--preds", "missing.csv", "--out-report", "r.json"], 1, "missing.csv");
    std::fs::write(d.join("bad.csv"), "split,label,p_0,p_1\nmember,0,0.7,0.3\nnonmember,1,0.5,0.6\n").unwrap();
    fails_with(d, &["audit", "--preds", "bad.csv", "--out-report", "r.json"], 1, "line 3");
    // 40 members exceed the enumeration guard.
    fails_with(d, &["oracle", "--preds", "preds.csv"], 1, "16");
}

#[test]
fn audit_cpm_and_render_build_one_report() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["audit", "--preds", "preds.csv", "--out-report", "a.json", "--model-tag", "vanilla"]);
    ok(d, &["cpm", "--preds", "preds.csv", "--k", "4", "--epochs", "20", "--lrs", "0.1", "--base-report", "a.json",
        "--out-report", "r.json", "--out-polytope", "p.json"]);
    let r = report(d, "r.json");
    let metrics: Vec<&str> = r["rows"].as_array().unwrap().iter().map(|row| row["metric"].as_str().unwrap()).collect();
    assert_eq!(metrics, ["msp", "ent", "ce", "me", "cpm"]);
    assert_eq!(r["model_tag"], "vanilla");
    assert!(r["metadata"]["cpm.config"].as_str().unwrap().contains("\"lrs\":[0.1]"));
    assert!(r["metadata"].get("generated_at_epoch").is_none());
    assert_eq!(report(d, "p.json")["K"], 4);

    let md = ok(d, &["render", "--report", "r.json"]);
    assert!(md.starts_with("# Membership inference audit: vanilla\n"));
    let csv = ok(d, &["render", "--report", "r.json", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 6);
    fails_with(d, &["render", "--report", "r.json", "--format", "yaml"], 2, "yaml");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = setup();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"scores": ["ce", "me"], "split_seed": 3, "model-tag": "from-config"}"#).unwrap();
    ok(d, &["audit", "--config", "c.json", "--preds", "preds.csv", "--out-report", "a.json"]);
    ok(d, &["audit", "--preds", "preds.csv", "--config", "c.json", "--split-seed", "5", "--out-report", "b.json"]);
    let (a, b) = (report(d, "a.json"), report(d, "b.json"));
    assert_eq!(a["rows"].as_array().unwrap().len(), 2);
    assert_eq!(a["model_tag"], "from-config");
    assert!(a["metadata"]["audit.config"].as_str().unwrap().contains("\"split_seed\":3"));
    assert!(b["metadata"]["audit.config"].as_str().unwrap().contains("\"split_seed\":5"));
    std::fs::write(d.join("bad.json"), "[1]").unwrap();
    fails_with(d, &["audit", "--config", "bad.json", "--preds", "preds.csv", "--out-report", "a.json"], 2, "object");
}

#[test]
fn mixup_from_file_matches_model_path() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["mixup-score", "--data", "data.csv", "--model", "model.json", "--aux-size", "6", "--r", "3",
        "--write-mixed", "mixed.csv", "--out-report", "m1.json"]);
    ok(d, &["mixup-score", "--mixed-preds", "mixed.csv", "--preds", "preds.csv", "--out-report", "m2.json"]);
    let row = |name| report(d, name)["rows"][0].clone();
    let (a, b) = (row("m1.json"), row("m2.json"));
    assert_eq!(a["metric"], "mixup");
    assert_eq!(a["evaluation_advantage"], b["evaluation_advantage"]);
    assert_eq!(a["threshold"], b["threshold"]);
    assert!(read(d, "mixed.csv").starts_with("query_id,r,aux_id,lambda,p_0,p_1,p_2\n"));
}

#[test]
fn oracle_reads_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("pts.csv"), "split,x_0,x_1\nmember,0,0\nmember,2,2\nnonmember,1,1\nnonmember,3,3\n").unwrap();
    let out: serde_json::Value = serde_json::from_str(&ok(d, &["cpb-oracle", "--points", "pts.csv"])).unwrap();
    assert_eq!(out["value"], 0.5);
    assert_eq!(out["family"], "convex");
    ok(d, &["oracle", "--points", "pts.csv", "--family", "halfspace", "--out", "h.json"]);
    assert_eq!(report(d, "h.json")["value"], 0.5);
}

#[test]
fn source_date_epoch_stamps_reports() {
    let dir = setup();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_cpm-audit"))
        .args(["audit", "--preds", "preds.csv", "--out-report", "a.json"])
        .current_dir(d)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(report(d, "a.json")["metadata"]["generated_at_epoch"], "1700000000");
}

#[test]
fn ablation_csv_and_thread_count_independence() {
    let dir = setup();
    let d = dir.path();
    let args = ["ablate-k", "--preds", "preds.csv", "--k-list", "1,2,4", "--epochs", "15", "--out-csv"];
    ok(d, &[&args[..], &["one.csv"]].concat());
    let out = Command::new(env!("CARGO_BIN_EXE_cpm-audit"))
        .args([&args[..], &["four.csv"]].concat())
        .current_dir(d)
        .env("CPM_AUDIT_THREADS", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    let one = read(d, "one.csv");
    assert_eq!(one, read(d, "four.csv"));
    assert_eq!(one.lines().next(), Some("k,advantage_percent"));
    assert_eq!(one.lines().count(), 4);
}
