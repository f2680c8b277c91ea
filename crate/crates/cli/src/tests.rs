//! Command-level tests, run in-process against a scratch store.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::commands::run_argv;

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn spanlab(store: &Path, args: &[&str]) -> Output {
    let mut argv = vec!["spanlab", "--store", store.to_str().unwrap()];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_argv(&argv, &mut out, &mut err);
    Output { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn stdout(o: &Output) -> String {
    o.out.clone()
}

fn stderr(o: &Output) -> String {
    o.err.clone()
}

fn campaigns(store: &Path) -> Vec<Value> {
    fs::read_to_string(store.join("campaigns.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn cr_prints_both_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = spanlab(dir.path(), &["cr", "--group", "Z15", "--both"]);
    assert_eq!(o.code, 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("formula 7 (special_case2)"), "{out}");
    assert!(out.contains("searched 7"), "{out}");
    let recs = campaigns(dir.path());
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["status"], "COMPLETE");
    assert_eq!(recs[0]["config"]["command"]["cr"]["group"], "Z15");
}

#[test]
fn input_errors_exit_nonzero_with_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let bad_group = spanlab(dir.path(), &["cr", "--group", "Q15"]);
    let bad_flag = spanlab(dir.path(), &["cr", "--group", "Z15", "--frobnicate"]);
    let bad_out = spanlab(dir.path(), &["cr", "--group", "Z15", "--out", "/nonexistent-dir/x.json"]);
    let bad_sub = spanlab(dir.path(), &["transmogrify"]);
    for o in [&bad_group, &bad_flag, &bad_out, &bad_sub] {
        assert_eq!(o.code, 1);
    }
    assert!(stderr(&bad_group).contains("cannot parse group spec"));
    assert!(stderr(&bad_flag).contains("--frobnicate"));
    assert!(stderr(&bad_out).contains("not writable"));
    assert!(stderr(&bad_sub).contains("transmogrify"));
    let recs = campaigns(dir.path());
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["status"], "FAILED");
}

#[test]
fn conjecture_certificate_lists_every_set() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let o = spanlab(dir.path(), &["conjecture", "--which", "2", "--p", "3", "--q", "5", "--out", cert.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&fs::read(&cert).unwrap()).unwrap();
    assert_eq!(v["verdict"], "REFUTED");
    assert_eq!(v["records"].as_array().unwrap().len(), 28);
    let outside = spanlab(dir.path(), &["conjecture", "--which", "2", "--p", "3", "--q", "7"]);
    assert_eq!(outside.code, 1);
    assert!(stderr(&outside).contains("window"));
}

#[test]
fn classify_rejects_non_extremal_sets() {
    let dir = tempfile::tempdir().unwrap();
    let ok = spanlab(dir.path(), &["classify", "--group", "Z15", "--set", "1,2,3,12,13,14"]);
    assert_eq!(ok.code, 0);
    assert!(stdout(&ok).contains("SHAPE_EX2"));
    let bad = spanlab(dir.path(), &["classify", "--group", "Z15", "--set", "1,2"]);
    assert_eq!(bad.code, 1);
    assert!(stderr(&bad).contains("not extremal"));
}

#[test]
fn fuzz_report_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = spanlab(dir.path(), &["fuzz-bounds", "--lemma", "2.3", "--trials", "500", "--seed", "9"]);
    assert_eq!(clean.code, 0, "{}", stdout(&clean));
    let dirty = spanlab(dir.path(), &["fuzz-bounds", "--lemma", "2.6", "--trials", "500", "--no-exhaustive"]);
    assert_eq!(dirty.code, 1);
    let recs = campaigns(dir.path());
    assert_eq!(recs[0]["config"]["command"]["fuzz-bounds"]["seed"], 9);
}

fn run_to_completion(store: &Path, out: &Path, max_nodes: &str) -> u32 {
    let ck = format!("{}.checkpoint.json", out.display());
    let o = spanlab(store, &["enumerate-extremal", "--group", "Z21", "--out", out.to_str().unwrap(), "--max-nodes", max_nodes]);
    let mut runs = 1;
    let mut code = o.code;
    while code == 2 {
        let o = spanlab(
            store,
            &["enumerate-extremal", "--group", "Z21", "--out", out.to_str().unwrap(), "--max-nodes", max_nodes, "--resume", &ck],
        );
        code = o.code;
        runs += 1;
        assert!(runs < 1000);
    }
    assert_eq!(code, 0);
    runs
}

#[test]
fn interrupted_enumeration_resumes_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let o = spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", full.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", stderr(&o));
    let again = dir.path().join("again.jsonl");
    spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(&full).unwrap(), fs::read(&again).unwrap());

    let parts = dir.path().join("parts.jsonl");
    assert!(run_to_completion(dir.path(), &parts, "2500") > 2);
    assert_eq!(fs::read(&full).unwrap(), fs::read(&parts).unwrap());

    let ck = format!("{}.checkpoint.json", parts.display());
    let noop = spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", parts.to_str().unwrap(), "--resume", &ck]);
    assert_eq!(noop.code, 0);
    assert!(stdout(&noop).contains("nothing to do"));
}

#[test]
fn bad_checkpoints_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let ck = dir.path().join("r.jsonl.checkpoint.json");
    let o = spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", out.to_str().unwrap(), "--max-nodes", "3000"]);
    assert_eq!(o.code, 2);
    let before = fs::read(&out).unwrap();

    let mut v: Value = serde_json::from_slice(&fs::read(&ck).unwrap()).unwrap();
    v["engine_version"] = Value::from("spanlab-engine/0");
    let stale = dir.path().join("stale.json");
    fs::write(&stale, serde_json::to_vec(&v).unwrap()).unwrap();
    let o = spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", out.to_str().unwrap(), "--resume", stale.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(stderr(&o).contains("cannot resume"), "{}", stderr(&o));

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, b"{\"engine_version\": ").unwrap();
    let o = spanlab(dir.path(), &["enumerate-extremal", "--group", "Z21", "--out", out.to_str().unwrap(), "--resume", corrupt.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(stderr(&o).contains("corrupt checkpoint"));

    assert_eq!(fs::read(&out).unwrap(), before, "a refused resume must leave the output alone");
}

#[test]
fn report_renders_and_checks_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z15.jsonl");
    spanlab(dir.path(), &["enumerate-extremal", "--group", "Z15", "--out", out.to_str().unwrap()]);
    let id = campaigns(dir.path())[0]["campaign_id"].as_str().unwrap().to_string();
    let o = spanlab(dir.path(), &["report", "--campaign", &id, "--format", "markdown"]);
    assert_eq!(o.code, 0);
    let text = stdout(&o);
    assert!(text.contains("28 records"));
    assert!(text.contains("| SHAPE_EX2 | 4 |"), "{text}");

    let list = spanlab(dir.path(), &["report", "--list"]);
    assert!(stdout(&list).contains(&id));

    let art = dir.path().join("artifacts").join(&id).join("records.jsonl");
    let mut bytes = fs::read(&art).unwrap();
    bytes.truncate(bytes.len() / 2);
    fs::write(&art, bytes).unwrap();
    let o = spanlab(dir.path(), &["report", "--campaign", &id]);
    assert_eq!(o.code, 1);
    assert!(stderr(&o).contains("checksum"));
}

#[test]
fn verify_main_resumes_with_totals() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("main.ck.json");
    let ck_s = ck.to_str().unwrap();
    let mut o = spanlab(dir.path(), &["verify-main", "--group", "Z33", "--no-orbit-dedup", "--max-nodes", "20000", "--checkpoint", ck_s]);
    let mut runs = 1;
    while o.code == 2 {
        o = spanlab(
            dir.path(),
            &["verify-main", "--group", "Z33", "--no-orbit-dedup", "--max-nodes", "20000", "--checkpoint", ck_s, "--resume", ck_s],
        );
        runs += 1;
        assert!(runs < 500);
    }
    assert_eq!(o.code, 0, "{}", stderr(&o));
    assert!(runs > 1);
    assert!(stdout(&o).contains("22 extremal sets"), "{}", stdout(&o));
    let refused = spanlab(dir.path(), &["verify-main", "--group", "Z21"]);
    assert_eq!(refused.code, 1);
}
