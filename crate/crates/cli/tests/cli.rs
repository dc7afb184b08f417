use std::path::Path;
use std::process::{Command, Output};

fn qmdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmdyn")).args(args).output().expect("spawn qmdyn")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn shipped_schema_is_current() {
    let shipped = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.schema.json")).unwrap();
    assert_eq!(shipped.trim_end(), qmdyn_cli::config::schema().trim_end());
}

#[test]
fn exit_codes() {
    assert_eq!(qmdyn(&["defect", "--L", "3"]).status.code(), Some(0));
    assert_eq!(qmdyn(&["approx-check", "--R", "20", "--C", "1/2"]).status.code(), Some(1));
    assert_eq!(qmdyn(&["defect", "--qm", "bogus:ab"]).status.code(), Some(2));
    assert_eq!(qmdyn(&["defect", "--L", "0"]).status.code(), Some(2));
    assert_eq!(qmdyn(&["defect", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qmdyn(&["model-set", "--window", "1,-1"]).status.code(), Some(2));
}

#[test]
fn failing_check_reports_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = qmdyn(&["approx-check", "--R", "20", "--C", "1/2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["ok"], false);
    assert!(!report["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn defect_csv_has_argmax() {
    let o = qmdyn(&["defect", "--rank", "2", "--qm", "counting:ab", "--L", "4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines().skip_while(|l| !l.starts_with("L,"));
    assert_eq!(lines.next(), Some("L,D_L,g,h"));
    assert_eq!(lines.nth(3).unwrap().split(',').take(2).collect::<Vec<_>>(), ["4", "1/1"]);
}

#[test]
fn written_config_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let o = qmdyn(&["hull-walk", "--steps", "2000", "--seed", "11", "--format", "json", "--out", first.to_str().unwrap()]);
    assert!(o.status.success());
    let config = first.join("config.json");
    let o = qmdyn(&["hull-walk", "--config", config.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success());
    let (a, b) = (read_dir_sorted(&first), read_dir_sorted(&second));
    assert_eq!(a.iter().map(|f| &f.0).collect::<Vec<_>>(), ["config.json", "report.json"]);
    assert_eq!(a[1], b[1]);
}

#[test]
fn config_for_other_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(qmdyn(&["drift", "--out", out.to_str().unwrap()]).status.success());
    let o = qmdyn(&["defect", "--config", out.join("config.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
