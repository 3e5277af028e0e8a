use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 11
[corpus]
alphabet = "ABC"
n_writers = 6
reps_per_writer = 3
[model]
hidden_layers = 1
hidden_size = 16
bias_hidden = 8
epochs = 2
[styles]
kinds = ["letter"]
"#;

fn hwstyle(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("run.toml");
    if !config.exists() {
        fs::write(&config, CONFIG).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_hwstyle"))
        .args(args)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("run"))
        .arg("--quiet")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn greedy_generation_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for cmd in ["synth", "preprocess", "train-styles", "train-generator"] {
        ok(hwstyle(d, &[cmd]));
    }
    let file = d.join("run/generated/letter.jsonl");
    ok(hwstyle(d, &["generate", "--temperature", "1e-7"]));
    let first = fs::read(&file).unwrap();
    ok(hwstyle(d, &["generate", "--temperature", "1e-7"]));
    assert_eq!(first, fs::read(&file).unwrap());
    assert!(!first.is_empty());

    let report = ok(hwstyle(d, &["evaluate", "--format", "csv"]));
    assert!(report.starts_with("model,modality,b1,b2,b3,pearson_r,pearson_p,wilcoxon_w,wilcoxon_p,n"));
    assert!(d.join("run/reports/report.provenance.json").exists());
}

#[test]
fn straight_line_plot_has_one_polyline_and_one_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(hwstyle(d, &["synth"]));
    ok(hwstyle(d, &["preprocess"]));
    let line = r#"{"reference":"w000/I/0","bias_kind":"letter","bias_key":"I","letter":"I","writer_id":"w000","seed":0,"temperature":1.0,"directions":[4,4,4,4,4],"speeds":[7,7,7,7,7]}"#;
    let input = d.join("line.jsonl");
    fs::write(&input, format!("{line}\n")).unwrap();
    let printed = ok(hwstyle(d, &["plot", "--bias", "letter", "--input", input.to_str().unwrap()]));
    assert_eq!(printed.lines().count(), 2);
    let svg = fs::read_to_string(d.join("run/plots/letter/I.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(svg.matches(r#"class="start""#).count(), 1);
    let again = ok(hwstyle(d, &["plot", "--bias", "letter", "--input", input.to_str().unwrap()]));
    assert_eq!(printed, again);
    assert_eq!(svg, fs::read_to_string(d.join("run/plots/letter/I.svg")).unwrap());
}

#[test]
fn errors_carry_category_and_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hwstyle(tmp.path(), &["preprocess"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error[config]: "), "{stderr}");

    let out = hwstyle(tmp.path(), &["synth", "--temperature", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("run/corpus/samples.jsonl").exists());
}

#[test]
fn config_prints_resolved_document() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(hwstyle(tmp.path(), &["config", "--seed", "42", "--bias", "classifier"]));
    assert!(text.contains("seed = 42"));
    assert!(text.contains("classifier_embedding"));
}
