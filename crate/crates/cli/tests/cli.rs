use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use keygrasp_core::codec::LabelMaps;
use keygrasp_core::io::kgnt::write_maps;
use serde_json::Value;

fn keygrasp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keygrasp")).args(args).output().expect("spawn keygrasp")
}

fn ok(args: &[&str]) -> String {
    let out = keygrasp(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(out: &Path) {
    ok(&["generate", "--out", p(out), "--count", "2", "--cameras", "2", "--width", "320", "--height", "240", "--seed", "5"]);
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn generate_decode_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (data, preds, metrics) = (dir.path().join("data"), dir.path().join("preds"), dir.path().join("metrics"));
    let summary = ok(&["generate", "--out", p(&data), "--count", "2", "--cameras", "2", "--width", "320", "--height", "240"]);
    assert!(summary.contains("train 4 / test_single 0 / test_multi 4"), "{summary}");
    let manifest = read_json(&data.join("manifest.json"));
    assert_eq!(manifest["frames"].as_array().unwrap().len(), 8);

    ok(&["decode", "--input", p(&data), "--out", p(&preds), "--overlay"]);
    assert!(preds.join("frames/single_00000_c0/overlay.png").is_file());
    ok(&["evaluate", "--predictions", p(&preds), "--dataset", p(&data), "--out", p(&metrics), "--split", "train"]);
    let report = read_json(&metrics.join("metrics.json"));
    let strict = &report["levels"][0];
    assert_eq!(strict["gsr"].as_f64().unwrap(), 100.0);
    assert_eq!(strict["osr"].as_f64().unwrap(), 100.0);
    assert!(metrics.join("metrics.txt").is_file());

    let truth = dir.path().join("truth");
    ok(&["truth", "--dataset", p(&data), "--out", p(&truth)]);
    ok(&["evaluate", "--predictions", p(&truth), "--dataset", p(&data), "--out", p(&metrics), "--threshold-level", "1"]);
    let report = read_json(&metrics.join("metrics.json"));
    assert_eq!(report["levels"].as_array().unwrap().len(), 1);
    for key in ["gsr", "gcr", "osr"] {
        assert_eq!(report["levels"][0][key].as_f64().unwrap(), 100.0);
    }
}

#[test]
fn generation_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    generate(&a);
    generate(&b);
    let (ta, tb) = (tree(&a), tree(&b));
    assert!(ta.len() > 10);
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(tb[k] == *v, "{} differs", k.display());
    }
}

#[test]
fn corrupted_tensor_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generate(&data);
    let y = data.join("frames/single_00000_c0/Y.kgnt");
    let mut bytes = std::fs::read(&y).unwrap();
    bytes[0] ^= 0xFF;
    std::fs::write(&y, bytes).unwrap();
    let out = keygrasp(&["decode", "--input", p(&data), "--out", p(&dir.path().join("preds"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at byte 0"));
}

#[test]
fn empty_heatmap_decodes_to_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("blank");
    write_maps(&frame, &LabelMaps::zeros(9, 120, 160, 4)).unwrap();
    let preds = dir.path().join("preds");
    ok(&["decode", "--input", p(&frame), "--out", p(&preds)]);
    assert_eq!(read_json(&preds.join("frames/blank/grasps.json")), Value::Array(vec![]));
}

#[test]
fn missing_prediction_frame_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let (data, preds) = (dir.path().join("data"), dir.path().join("preds"));
    generate(&data);
    ok(&["truth", "--dataset", p(&data), "--out", p(&preds)]);
    std::fs::remove_dir_all(preds.join("frames/multi_00001_c1")).unwrap();
    let out = keygrasp(&["evaluate", "--predictions", p(&preds), "--dataset", p(&data), "--out", p(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("multi_00001_c1"));
    // Restricting to a split the gap does not touch succeeds.
    ok(&["evaluate", "--predictions", p(&preds), "--dataset", p(&data), "--out", p(&dir.path().join("m")), "--split", "train"]);
}

#[test]
fn ablate_reports_every_compatible_cell() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(&["ablate", "--out", p(dir.path()), "--count", "50", "--sigma", "0,1"]);
    assert!(table.contains("ippe"));
    let cells = read_json(&dir.path().join("ablation.json"))["cells"].as_array().unwrap().len();
    assert_eq!(cells, 16);
}

#[test]
fn render_reproduces_stored_camera() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generate(&data);
    let out = dir.path().join("render");
    let scene = data.join("scenes/multi_00000/scene.json");
    let msg = ok(&["render", "--scene", p(&scene), "--camera", "1", "--out", p(&out)]);
    assert_eq!(msg.trim(), "rendered 320x240");
    for f in ["color.png", "depth.png"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(data.join("frames/multi_00000_c1").join(f)).unwrap());
    }
    let bad = keygrasp(&["render", "--scene", p(&scene), "--camera", "9", "--out", p(&out)]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(keygrasp(&["generate"]).status.code(), Some(1));
    assert_eq!(keygrasp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(keygrasp(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\nunknown_key = 2\n").unwrap();
    let out = keygrasp(&["--config", p(&cfg), "generate", "--out", p(&dir.path().join("x")), "--dry-run"]);
    assert_eq!(out.status.code(), Some(1));
    let out = keygrasp(&["decode", "--input", p(dir.path()), "--out", p(dir.path()), "--threshold", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dry_run_prints_default_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan");
    let msg = ok(&["generate", "--out", p(&out), "--dry-run"]);
    assert!(msg.contains("train 4000 / test_single 1000 / test_multi 1000 (total 6000)"), "{msg}");
    assert!(!out.exists());
}
