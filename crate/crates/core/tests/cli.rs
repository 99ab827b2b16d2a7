use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mofuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mofuse")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn static_scene_round_trip_scores_perfectly() {
    let tmp = TempDir::new().unwrap();
    let (scene, out) = (tmp.path().join("d"), tmp.path().join("o"));
    ok(&mofuse(&["synth", "--scenario", "static", "--seed", "1", "--out", p(&scene)]));
    ok(&mofuse(&["segment", "--scene", p(&scene), "--views", "traj,flow", "--seed", "1", "--out", p(&out)]));
    let eval = mofuse(&["eval", "--pred", p(&out), "--gt", p(&scene)]);
    ok(&eval);
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(report["Fu"], 1.0);
    assert_eq!(report["Pu"], 1.0);
    assert_eq!(report["Ru"], 1.0);
}

#[test]
fn missing_scene_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nowhere");
    let out = mofuse(&["segment", "--scene", p(&missing), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(p(&missing)));
}

#[test]
fn bad_usage_exits_2() {
    assert_eq!(mofuse(&["segment"]).status.code(), Some(2));
    assert_eq!(mofuse(&["synth", "--scenario", "nonsense", "--out", "x"]).status.code(), Some(2));
    assert_eq!(mofuse(&["frobnicate"]).status.code(), Some(2));
    let tmp = TempDir::new().unwrap();
    let views = mofuse(&["segment", "--scene", p(tmp.path()), "--views", "traj,depth", "--out", "o"]);
    assert_eq!(views.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let out = mofuse(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["segment", "synth", "eval", "validate"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn segment_twice_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("d");
    ok(&mofuse(&["synth", "--scenario", "multi_object", "--seed", "4", "--noise", "0.5", "--out", p(&scene)]));
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&mofuse(&["segment", "--scene", p(&scene), "--seed", "9", "--out", p(&out), "--debug-dump"]));
        dir_bytes(&out)
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a.iter().any(|(n, _)| n == "result.json"));
    assert!(a.iter().any(|(n, _)| n == "evidence.json"));
    assert_eq!(a, b);
}

#[test]
fn synth_twice_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&mofuse(&["synth", "--scenario", "parallax", "--seed", "3", "--noise", "0.5", "--out", p(&out)]));
        dir_bytes(&out)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn validate_reports_ok_and_corruption() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("d");
    ok(&mofuse(&["synth", "--scenario", "epipolar_degenerate", "--seed", "2", "--out", p(&scene)]));
    let good = mofuse(&["validate", "--scene", p(&scene)]);
    ok(&good);
    assert_eq!(String::from_utf8_lossy(&good.stdout).trim(), "ok");

    // zero out one depth value: depth must stay positive
    let depth = scene.join("depth_0000.mdep");
    let mut bytes = std::fs::read(&depth).unwrap();
    bytes[12..16].copy_from_slice(&0f32.to_le_bytes());
    std::fs::write(&depth, bytes).unwrap();
    let bad = mofuse(&["validate", "--scene", p(&scene)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stdout.is_empty());
}

#[test]
fn eval_against_itself_and_views_flag() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("d");
    let out = tmp.path().join("o");
    ok(&mofuse(&["synth", "--scenario", "epipolar_degenerate", "--seed", "1", "--noise", "0.5", "--out", p(&scene)]));
    ok(&mofuse(&["segment", "--scene", p(&scene), "--views", "flow", "--out", p(&out)]));
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["views"], serde_json::json!(["flow"]));
    let eval = mofuse(&["eval", "--pred", p(&out), "--gt", p(&out)]);
    ok(&eval);
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(report["Fu"], 1.0);
}
