use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn opf_forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opf-forge")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = opf_forge(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    v.sort();
    v
}

/// synth + extract on a small cohort, shared by several tests.
fn cohort(dir: &Path, subjects: &str) {
    ok(&["synth", "--subjects", subjects, "--seed", "5", "--duration-s", "4", "--out", &p(dir, "signals")]);
    ok(&["extract", "--signals", &p(dir, "signals"), "--out", &p(dir, "desc.csv")]);
}

#[test]
fn synth_writes_one_file_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--subjects", "10", "--out", &p(dir.path(), "s")]);
    let signals = dir.path().join("s");
    assert_eq!(csv_files(&signals).len(), 20);
    let manifest = json(&p(&signals, "manifest.json"));
    let entries = manifest["signals"].as_array().unwrap();
    assert_eq!(entries.len(), 20);
    for label in ["HC", "PD"] {
        assert_eq!(entries.iter().filter(|e| e["label"] == label).count(), 10);
    }
}

#[test]
fn full_pipeline_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d, "5");
    ok(&["dict", "--descriptors", &p(d, "desc.csv"), "--out", &p(d, "dict.json")]);
    ok(&["quantize", "--descriptors", &p(d, "desc.csv"), "--dict", &p(d, "dict.json"), "--out", &p(d, "hist.json")]);
    ok(&["train", "--histograms", &p(d, "hist.json"), "--out", &p(d, "model.json")]);
    let summary = ok(&["predict", "--model", &p(d, "model.json"), "--histograms", &p(d, "hist.json"), "--out", &p(d, "pred.json")]);
    assert!(summary.contains("balanced accuracy"), "{summary}");
    let pred = json(&p(d, "pred.json"));
    assert_eq!(pred["predictions"].as_array().unwrap().len(), 10);
    let acc = pred["balanced_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    ok(&["eval", "--histograms", &p(d, "hist.json"), "--out", &p(d, "report.json"), "--table", &p(d, "table.txt")]);
    let report = json(&p(d, "report.json"));
    assert_eq!(report["accuracies"].as_array().unwrap().len(), 15);
    assert_eq!(report["version"], 1);
    let table = fs::read_to_string(p(d, "table.txt")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.contains('±'));

    ok(&["eval", "--histograms", &p(d, "hist.json"), "--shuffle-labels", "1", "--out", &p(d, "control.json")]);
    ok(&["eval", "--compare", &p(d, "report.json"), &p(d, "control.json"), "--out", &p(d, "cmp.json")]);
    let cmp = json(&p(d, "cmp.json"));
    assert!(cmp["outcome"].is_string());
}

#[test]
fn dimension_mismatch_names_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d, "2");
    ok(&["extract", "--signals", &p(d, "signals"), "--window-ms", "160", "--stride-ms", "80", "--out", &p(d, "wide.csv")]);
    ok(&["dict", "--descriptors", &p(d, "wide.csv"), "--method", "opf", "--k-max", "5", "--out", &p(d, "wide.json")]);
    let out = opf_forge(&["eval", "--descriptors", &p(d, "desc.csv"), "--dict", &p(d, "wide.json"), "--out", &p(d, "r.json")]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dimension mismatch"), "{err}");
    assert!(err.contains("wide.json") && err.contains("desc.csv"), "{err}");
    assert!(err.contains("dimension 84") && err.contains("dimension 96"), "{err}");
    assert!(!d.join("r.json").exists());
}

#[test]
fn bad_invocations_fail() {
    let out = opf_forge(&["synth", "--subjects", "2", "--frobnicate", "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--frobnicate"));

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d, "2");
    ok(&["dict", "--descriptors", &p(d, "desc.csv"), "--method", "kmeans", "--k", "3", "--out", &p(d, "dict.json")]);
    let text = fs::read_to_string(p(d, "dict.json")).unwrap();
    fs::write(p(d, "future.json"), text.replacen("\"version\": 1", "\"version\": 99", 1)).unwrap();
    let out = opf_forge(&["quantize", "--descriptors", &p(d, "desc.csv"), "--dict", &p(d, "future.json"), "--out", &p(d, "h.json")]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("future.json") && err.contains("99"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_opf-forge"))
        .env("OPF_FORGE_THREADS", "zero")
        .args(["synth", "--subjects", "1", "--out", &p(d, "t")])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("OPF_FORGE_THREADS"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d, "3");
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = p(d, &format!("report{threads}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_opf-forge"))
            .env("OPF_FORGE_THREADS", threads)
            .args(["eval", "--signals", &p(d, "signals"), "--runs", "4", "--seed", "2", "--out", &out])
            .status()
            .unwrap();
        assert!(status.success());
        reports.push(fs::read(out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        cohort(dir, "3");
        ok(&["dict", "--descriptors", &p(dir, "desc.csv"), "--out", &p(dir, "dict.json")]);
        ok(&["quantize", "--descriptors", &p(dir, "desc.csv"), "--dict", &p(dir, "dict.json"), "--out", &p(dir, "hist.json")]);
    }
    for name in ["desc.csv", "dict.json", "hist.json", "signals/manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let (sa, sb) = (csv_files(&a.path().join("signals")), csv_files(&b.path().join("signals")));
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}
