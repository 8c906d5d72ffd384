use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_stream-locator");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("STREAM_LOCATOR_SEED")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn compose(dir: &Path, count: usize, seed: u64) -> std::path::PathBuf {
    let out = dir.join("manifests.jsonl");
    let o = run(&[
        "--seed",
        &seed.to_string(),
        "compose",
        "--synthetic-corpus",
        &count.to_string(),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["compose", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn compose_is_deterministic_per_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let fa = fs::read(compose(a.path(), 40, 9)).unwrap();
    let fb = fs::read(compose(b.path(), 40, 9)).unwrap();
    let fc = fs::read(compose(c.path(), 40, 10)).unwrap();
    assert_eq!(fa, fb);
    assert_ne!(fa, fc);
    assert_eq!(String::from_utf8(fa).unwrap().lines().count(), 40);
}

#[test]
fn seed_env_var_matches_flag() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let fa = fs::read(compose(a.path(), 20, 77)).unwrap();
    let out = b.path().join("m.jsonl");
    let o = Command::new(BIN)
        .args(["compose", "--synthetic-corpus", "20", "--out", p(&out)])
        .env("STREAM_LOCATOR_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fa, fs::read(out).unwrap());
}

#[test]
fn compose_summary_keys() {
    let d = TempDir::new().unwrap();
    let out = compose(d.path(), 30, 1);
    let s = read_json(&d.path().join("manifests.jsonl.summary.json"));
    for key in ["count", "scan_rate_fps", "duration", "target_duration", "background_duration", "splits", "question_types"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    assert_eq!(s["count"], 30);
    assert_eq!(s["splits"]["train"].as_u64().unwrap() + s["splits"]["val"].as_u64().unwrap() + s["splits"]["test"].as_u64().unwrap(), 30);
    assert!(out.exists());
}

#[test]
fn compose_without_qa_pool_is_missing_qa() {
    let d = TempDir::new().unwrap();
    let t = d.path().join("t.jsonl");
    let b = d.path().join("b.jsonl");
    fs::write(&t, "{\"clip_id\":\"t0\",\"length_frames\":40,\"kind\":\"target\"}\n").unwrap();
    fs::write(&b, "{\"clip_id\":\"b0\",\"length_frames\":200,\"kind\":\"background\"}\n").unwrap();
    let out = d.path().join("m.jsonl");
    let o = run(&["compose", "--targets", p(&t), "--backgrounds", p(&b), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=MissingQA code=2"), "{}", stderr(&o));

    // A pool without this clip fails the same way.
    let qa = d.path().join("qa.jsonl");
    fs::write(&qa, "{\"clip_id\":\"other\",\"question_text\":\"who?\",\"question_type\":\"who\",\"answer_label\":\"x\"}\n").unwrap();
    let o = run(&["compose", "--targets", p(&t), "--backgrounds", p(&b), "--qa-pool", p(&qa), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=MissingQA"), "{}", stderr(&o));
    assert!(!out.exists());

    fs::write(&qa, "{\"clip_id\":\"t0\",\"question_text\":\"who?\",\"question_type\":\"who\",\"answer_label\":\"x\"}\n").unwrap();
    let o = run(&["compose", "--targets", p(&t), "--backgrounds", p(&b), "--qa-pool", p(&qa), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_str(fs::read_to_string(&out).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(m["target"]["clip_id"], "t0");
}

#[test]
fn malformed_embeddings_are_format_errors() {
    let d = TempDir::new().unwrap();
    let manifests = compose(d.path(), 1, 3);
    let first: Value = serde_json::from_str(fs::read_to_string(&manifests).unwrap().lines().next().unwrap()).unwrap();
    let id = first["video_id"].as_str().unwrap();
    let emb = d.path().join("emb");
    fs::create_dir(&emb).unwrap();
    fs::write(emb.join(format!("{id}.question.txt")), "-1 2 1.0 0.0\n").unwrap();
    fs::write(emb.join(format!("{id}.frames.txt")), "0 2 1.0 0.0\n1 3 1.0 oops 0.0\n").unwrap();
    let out = d.path().join("o.jsonl");
    let o = run(&[
        "locate",
        "--manifests",
        p(&manifests),
        "--out",
        p(&out),
        "--scorer",
        "embedding-file",
        "--embeddings-dir",
        p(&emb),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kind=FormatError code=2"), "{err}");
    assert!(err.contains(":2:"), "line number missing: {err}");
    // Outputs are still written, with the failure recorded.
    let s = read_json(&d.path().join("o.jsonl.summary.json"));
    assert_eq!(s["failures"][0]["kind"], "FormatError");
}

#[test]
fn eval_with_unknown_video_is_join_error() {
    let d = TempDir::new().unwrap();
    let manifests = compose(d.path(), 5, 4);
    let outcomes = d.path().join("o.jsonl");
    let o = run(&["locate", "--manifests", p(&manifests), "--out", p(&outcomes)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&outcomes).unwrap();
    fs::write(&outcomes, text.replacen("video_00000", "video_99999", 1)).unwrap();
    let o = run(&["eval", "--manifests", p(&manifests), "--outcomes", p(&outcomes), "--out-dir", p(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=JoinError"), "{}", stderr(&o));
}

#[test]
fn external_garbage_scorer_exits_with_scorer_code() {
    let d = TempDir::new().unwrap();
    let manifests = compose(d.path(), 2, 5);
    let o = run(&[
        "locate",
        "--manifests",
        p(&manifests),
        "--out",
        p(&d.path().join("o.jsonl")),
        "--scorer",
        "external",
        "--",
        BIN,
        "scorer-stub",
        "garbage",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kind=ScorerProtocolError code=3"), "{}", stderr(&o));
}

#[test]
fn locate_writes_traces() {
    let d = TempDir::new().unwrap();
    let manifests = compose(d.path(), 3, 6);
    let traces = d.path().join("traces");
    let out = d.path().join("o.jsonl");
    let o = run(&["locate", "--manifests", p(&manifests), "--out", p(&out), "--traces-dir", p(&traces)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs: Vec<Value> = fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for r in &recs {
        let id = r["video_id"].as_str().unwrap();
        let csv = fs::read_to_string(traces.join(format!("{id}.trace.csv"))).unwrap();
        let rows = stream_locator::formats::parse_trace_csv(&csv).unwrap();
        assert_eq!(rows.len() as u64, r["frames_scored"].as_u64().unwrap());
        let jsonl = fs::read_to_string(traces.join(format!("{id}.trace.jsonl"))).unwrap();
        assert_eq!(jsonl.lines().count(), rows.len());
    }
}

#[test]
fn sample_produces_requested_frames() {
    let d = TempDir::new().unwrap();
    let manifests = compose(d.path(), 4, 8);
    let outcomes = d.path().join("o.jsonl");
    assert!(run(&["locate", "--manifests", p(&manifests), "--out", p(&outcomes)]).status.success());
    let samples = d.path().join("s.jsonl");
    for strategy in ["fibonacci", "uniform"] {
        let o = run(&[
            "sample",
            "--manifests",
            p(&manifests),
            "--outcomes",
            p(&outcomes),
            "--out",
            p(&samples),
            "--strategy",
            strategy,
            "--n-frames",
            "4",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for line in fs::read_to_string(&samples).unwrap().lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            let frames = v["frames"].as_array().unwrap();
            assert_eq!(frames.len(), 4);
        }
    }
}

#[test]
fn demo_is_byte_identical_per_seed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = run(&["--seed", "5", "demo", "--out-dir", p(d.path()), "--count", "20", "--plots"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["manifests.jsonl", "outcomes.jsonl", "samples.jsonl", "report.csv", "report.json", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let s = read_json(&a.path().join("summary.json"));
    for key in ["count", "mean_iou", "hit_rate", "mean_frames_ratio", "per_question_type"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    assert_eq!(s["hit_rate"], 1.0);
    assert!(a.path().join("plots/iou_histogram.svg").exists());
}
