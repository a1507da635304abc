use std::path::Path;
use std::process::{Command, Output};

fn gmq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmq")).args(args).current_dir(cwd).env("GMQ_THREADS", "1").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn synth_fit_eval_turntable_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = gmq(&["synth", "--scene", "sphere", "--views", "10", "--seed", "2", "--resolution", "32", "--out", "ds"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("ds/manifest.json").exists() && d.join("ds/mask_009.png").exists());

    let o = gmq(
        &[
            "fit", "--dataset", "ds", "--k", "1", "--iters", "40", "--lr", "0.05", "--freeze-yaw", "--out-model",
            "out/model.json", "--out-curve", "out/curve.csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = std::fs::read_to_string(d.join("out/curve.csv")).unwrap();
    assert!(curve.starts_with("iter,loss\n0,"));
    assert_eq!(curve.lines().count(), 42);

    let o = gmq(&["eval", "--model", "out/model.json", "--dataset", "ds", "--split", "all"], d);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("10 views") && out.contains("mean IoUx100"), "{out}");

    let o = gmq(&["turntable", "--model", "out/model.json", "--frames", "3", "--out", "tt"], d);
    assert_eq!(code(&o), 0);
    for i in 0..3 {
        assert!(d.join(format!("tt/frame_{i:03}_sum.png")).exists());
        assert!(d.join(format!("tt/frame_{i:03}_sil.png")).exists());
    }
    let o = gmq(&["turntable", "--model", "out/model.json", "--frames", "2", "--out", "tt2", "--image", "nope"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&gmq(&["fit", "--k", "2"], d)), 2);
    assert_eq!(code(&gmq(&["frobnicate"], d)), 2);
    assert_eq!(code(&gmq(&["synth", "--scene", "teapot", "--views", "2", "--out", "x"], d)), 2);
    assert_eq!(code(&gmq(&["fit", "--dataset", "missing", "--k", "2", "--out-model", "m.json"], d)), 3);
    std::fs::write(d.join("bad.json"), "{\"version\": 1}").unwrap();
    let o = gmq(&["turntable", "--model", "bad.json", "--frames", "1", "--out", "t"], d);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));

    gmq(&["synth", "--scene", "sphere", "--views", "2", "--resolution", "16", "--out", "ds"], d);
    let o = gmq(&["fit", "--dataset", "ds", "--k", "2", "--param", "chol", "--out-model", "m.json"], d);
    assert_eq!(code(&o), 2);
    let o = gmq(&["fit", "--dataset", "ds", "--k", "0", "--out-model", "m.json"], d);
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_gmq")).args(["synth", "--scene", "sphere", "--views", "1", "--out", "y"]).current_dir(d).env("GMQ_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&gmq(&["--help"], d)), 0);
}
