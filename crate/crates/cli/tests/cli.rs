use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn salience(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_salience"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = salience(dir, args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    salience(dir, args).status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A small synthetic corpus with vectors, and a quick training config.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("synth.json"),
        r#"{"num_train": 30, "num_dev": 10, "num_test": 10, "dim": 8}"#,
    )
    .unwrap();
    fs::write(d.join("train.json"), r#"{"epochs": 2, "batch_docs": 8}"#).unwrap();
    ok(d, &["synth", "--config", "synth.json", "--seed", "5", "--out-dir", "data"]);
    dir
}

fn train(d: &Path, model: &str, out: &str, extra: &[&str]) {
    let mut args = vec![
        "train",
        "--model",
        model,
        "--config",
        "train.json",
        "--train",
        "data/train.jsonl",
        "--dev",
        "data/dev.jsonl",
        "--event-vectors",
        "data/event_vectors.txt",
        "--entity-vectors",
        "data/entity_vectors.txt",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    ok(d, &args);
}

fn manifest_of(d: &Path, primary: &str) -> Value {
    json(&d.join(format!("{primary}.manifest.json")))
}

fn labels(corpus: &Path) -> HashMap<(String, String), bool> {
    let mut out = HashMap::new();
    for line in fs::read_to_string(corpus).unwrap().lines() {
        let doc: Value = serde_json::from_str(line).unwrap();
        let id = doc["doc_id"].as_str().unwrap().to_string();
        for e in doc["events"].as_array().unwrap() {
            let salient = e["salient"].as_bool().unwrap();
            out.insert((id.clone(), e["id"].as_str().unwrap().to_string()), salient);
        }
    }
    out
}

fn pair_count_auc(scores: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

#[test]
fn synth_writes_splits_vectors_and_manifest() {
    let dir = workspace();
    let data = dir.path().join("data");
    for f in ["train.jsonl", "dev.jsonl", "test.jsonl", "event_vectors.txt", "entity_vectors.txt", "pools.json"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let m = json(&data.join("manifest.json"));
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seeds"]["synth"], 5);
    assert_eq!(m["summary"]["train"], 30);
    assert!(m["summary"]["measured_gap"].as_f64().unwrap().is_finite());
    assert_eq!(fs::read_to_string(data.join("test.jsonl")).unwrap().lines().count(), 10);
}

#[test]
fn pipeline_rank_agrees_with_evaluate() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["annotate", "--corpus", "data/train.jsonl", "--out", "annotated.jsonl", "--no-label"]);
    assert!(manifest_of(d, "annotated.jsonl")["outputs"][0].as_str().unwrap().ends_with("annotated.jsonl"));
    let stats: Value = serde_json::from_str(&ok(d, &["stats", "--corpus", "data/train.jsonl"])).unwrap();
    assert_eq!(stats["documents"], 30);

    ok(d, &["build-vocab", "--corpus", "data/train.jsonl", "--field", "event", "--out", "ev.json"]);
    ok(d, &["build-vocab", "--corpus", "data/train.jsonl", "--field", "entity", "--out", "en.json"]);
    train(d, "kce", "kce.json", &["--event-vocab", "ev.json", "--entity-vocab", "en.json"]);
    let m = manifest_of(d, "kce.json");
    assert_eq!(m["command"], "train");
    assert!(m["summary"]["final_loss"].as_f64().unwrap().is_finite());
    let history = fs::read_to_string(d.join("kce.json.history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);

    ok(d, &["rank", "--model", "kce.json", "--corpus", "data/test.jsonl", "--out", "ranks.jsonl"]);
    ok(d, &["evaluate", "--model", "kce.json", "--corpus", "data/test.jsonl", "--out", "eval.json"]);
    let truth = labels(&d.join("data/test.jsonl"));
    let report = json(&d.join("eval.json"));
    let per_doc: HashMap<String, Option<f64>> = report["per_doc"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["doc_id"].as_str().unwrap().to_string(), r["auc"].as_f64()))
        .collect();
    let ranks = fs::read_to_string(d.join("ranks.jsonl")).unwrap();
    assert_eq!(ranks.lines().count(), 10);
    for line in ranks.lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        let id = r["doc_id"].as_str().unwrap();
        let ranking = r["ranking"].as_array().unwrap();
        let scored: Vec<(f64, bool)> = ranking
            .iter()
            .map(|e| {
                let ev = e["event_id"].as_str().unwrap().to_string();
                (e["score"].as_f64().unwrap(), truth[&(id.to_string(), ev)])
            })
            .collect();
        assert!(scored.windows(2).all(|w| w[0].0 >= w[1].0), "{id} not sorted");
        let want = pair_count_auc(&scored);
        let got = per_doc[id];
        match (want, got) {
            (Some(w), Some(g)) => assert!((w - g).abs() < 1e-12, "{id}: {w} vs {g}"),
            (None, None) => {}
            other => panic!("{id}: {other:?}"),
        }
    }
}

#[test]
fn training_and_ranking_are_deterministic_across_threads() {
    let dir = workspace();
    let d = dir.path();
    let mut models = Vec::new();
    for (threads, out) in [("1", "a.json"), ("1", "b.json"), ("3", "c.json")] {
        let mut args = vec!["--threads", threads];
        args.extend([
            "train",
            "--model",
            "kce",
            "--config",
            "train.json",
            "--train",
            "data/train.jsonl",
            "--dev",
            "data/dev.jsonl",
            "--dim",
            "8",
            "--out",
            out,
        ]);
        ok(d, &args);
        models.push(fs::read(d.join(out)).unwrap());
    }
    assert_eq!(models[0], models[1]);
    assert_eq!(models[0], models[2]);
    ok(d, &["rank", "--model", "a.json", "--corpus", "data/test.jsonl", "--out", "r1.jsonl"]);
    ok(d, &["--threads", "2", "rank", "--model", "a.json", "--corpus", "data/test.jsonl", "--out", "r2.jsonl"]);
    assert_eq!(fs::read(d.join("r1.jsonl")).unwrap(), fs::read(d.join("r2.jsonl")).unwrap());
}

#[test]
fn every_model_kind_trains_and_evaluates() {
    let dir = workspace();
    let d = dir.path();
    for model in ["letor", "kce-e", "kce-ef", "pagerank"] {
        let out = format!("{model}.json");
        train(d, model, &out, &[]);
        let eval = format!("{model}.eval.json");
        ok(d, &["evaluate", "--model", &out, "--corpus", "data/test.jsonl", "--out", &eval]);
        let auc = json(&d.join(&eval))["auc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc), "{model}: {auc}");
    }
    let pr = manifest_of(d, "pagerank.json");
    let lambda = pr["summary"]["combine_lambda"].as_f64().unwrap();
    assert!((lambda * 10.0 - (lambda * 10.0).round()).abs() < 1e-9);
}

#[test]
fn baselines_sigtest_and_intrusion() {
    let dir = workspace();
    let d = dir.path();
    train(d, "kce", "kce.json", &[]);
    ok(d, &["evaluate", "--model", "kce.json", "--corpus", "data/test.jsonl", "--out", "kce.eval.json"]);
    for b in ["frequency", "location"] {
        let out = format!("{b}.eval.json");
        ok(d, &["evaluate", "--baseline", b, "--corpus", "data/test.jsonl", "--out", &out, "--tie-seed", "4"]);
        assert_eq!(manifest_of(d, &out)["seeds"]["tie_break"], 4);
    }
    let stdout = ok(
        d,
        &[
            "sigtest", "--a", "kce.eval.json", "--b", "frequency.eval.json", "--iterations", "2000", "--out", "sig.json",
        ],
    );
    let sig: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(sig, json(&d.join("sig.json")));
    assert_eq!(sig["n"], 10);
    let p = sig["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);

    let same: Value = serde_json::from_str(&ok(
        d,
        &["sigtest", "--a", "kce.eval.json", "--b", "kce.eval.json", "--metric", "p@5", "--iterations", "500"],
    ))
    .unwrap();
    assert_eq!(same["p_value"], 1.0);

    ok(d, &["intrude", "--model", "kce.json", "--corpus", "data/test.jsonl", "--pairs", "10", "--out", "curve.csv"]);
    let csv = fs::read_to_string(d.join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "fraction,auc,sa_auc,frequency_sa_auc,n_pairs");
    assert!(lines.count() > 0);
    assert_eq!(manifest_of(d, "curve.csv")["command"], "intrude");
}

#[test]
fn export_kernel_weights_has_one_row_per_kernel() {
    let dir = workspace();
    let d = dir.path();
    train(d, "kce", "kce.json", &[]);
    ok(d, &["export-kernel-weights", "--model", "kce.json", "--out", "k.csv"]);
    let csv = fs::read_to_string(d.join("k.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "mu,sigma,w_v,w_e");
    assert_eq!(rows.len(), 12);
    assert!(rows[1].starts_with("1.0,0.001,"));
    let model = json(&d.join("kce.json"));
    let w_v: Vec<f64> = serde_json::from_value(model["w_v"].clone()).unwrap();
    for (row, w) in rows[1..].iter().zip(&w_v) {
        let got: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(got, *w);
    }
}

#[test]
fn gradcheck_exit_status_follows_tolerance() {
    let dir = workspace();
    let d = dir.path();
    train(d, "kce", "kce.json", &[]);
    let frozen = [
        "gradcheck", "--model", "kce.json", "--corpus", "data/test.jsonl", "--docs", "3", "--freeze-embeddings",
        "--step", "1e-5", "--tolerance", "1e-4", "--out", "gc.json",
    ];
    ok(d, &frozen);
    let report = json(&d.join("gc.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["documents"].as_array().unwrap().len(), 3);
    let strict = [
        "gradcheck", "--model", "kce.json", "--corpus", "data/test.jsonl", "--docs", "1", "--tolerance", "1e-300",
    ];
    assert_eq!(code(d, &strict), 3);
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let d = dir.path();
    train(d, "letor", "letor.json", &[]);
    fs::write(d.join("bad.jsonl"), "{\"doc_id\": \"x\", \"events\": [\n").unwrap();

    // usage
    assert_eq!(code(d, &["rank", "--model", "letor.json"]), 1);
    assert_eq!(code(d, &["--threads", "0", "stats", "--corpus", "data/test.jsonl"]), 1);
    assert_eq!(code(d, &["evaluate", "--baseline", "location", "--corpus", "data/test.jsonl", "--out", "e.json", "--cutoffs", "0"]), 1);
    assert_eq!(code(d, &["sigtest", "--a", "x", "--b", "y", "--metric", "ndcg"]), 1);
    assert_eq!(code(d, &["no-such-command"]), 1);
    assert_eq!(code(d, &["--help"]), 0);

    // data
    assert_eq!(code(d, &["stats", "--corpus", "missing.jsonl"]), 2);
    assert_eq!(code(d, &["stats", "--corpus", "bad.jsonl"]), 2);
    assert_eq!(code(d, &["rank", "--model", "missing.json", "--corpus", "data/test.jsonl", "--out", "r"]), 2);
    assert_eq!(code(d, &["export-kernel-weights", "--model", "letor.json", "--out", "k.csv"]), 2);
    assert_eq!(code(d, &["rank", "--model", "bad.jsonl", "--corpus", "data/test.jsonl", "--out", "r"]), 2);
    fs::write(d.join("bad_train.json"), r#"{"learning_rate": 0}"#).unwrap();
    let bad_cfg = [
        "train", "--model", "letor", "--config", "bad_train.json", "--train", "data/train.jsonl", "--dev",
        "data/dev.jsonl", "--dim", "8", "--out", "x.json",
    ];
    assert_eq!(code(d, &bad_cfg), 2);
    let err = String::from_utf8(salience(d, &["stats", "--corpus", "missing.jsonl"]).stderr).unwrap();
    assert!(err.contains("missing.jsonl"), "{err}");

}

#[test]
fn empty_corpus_gives_empty_ranking() {
    let dir = workspace();
    let d = dir.path();
    train(d, "letor", "letor.json", &[]);
    fs::write(d.join("empty.jsonl"), "").unwrap();
    ok(d, &["rank", "--model", "letor.json", "--corpus", "empty.jsonl", "--out", "r.jsonl"]);
    assert_eq!(fs::read_to_string(d.join("r.jsonl")).unwrap(), "");
}
