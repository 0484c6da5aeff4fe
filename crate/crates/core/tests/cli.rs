use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden(file: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(file)).unwrap()
}

fn sentience(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentience"))
        .args(args)
        .env("SENTIENCE_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(format!("{name}.toml")).display().to_string()
}

#[test]
fn run_writes_the_pinned_minimal_record() {
    let root = tempfile::tempdir().unwrap();
    let out = sentience(root.path(), &["run", &cfg("minimal")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let record = std::fs::read_to_string(root.path().join("minimal/record.json")).unwrap();
    assert_eq!(record, golden("minimal_record.json"));
}

#[test]
fn run_sweep_and_report_on_shipped_configs() {
    let root = tempfile::tempdir().unwrap();
    for name in ["minimal", "illusion", "pain"] {
        assert_eq!(sentience(root.path(), &["run", &cfg(name)]).status.code(), Some(0), "{name}");
    }
    let out = sentience(root.path(), &["sweep", &cfg("illusion"), "--grid", "env.bias=0.1,0.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.path().join("illusion/cell-001/record.json").exists());

    let out = sentience(root.path(), &["report", &root.path().display().to_string()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(root.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), golden("metrics_header.csv").trim_end());
    // two sweep cells, the illusion run itself, minimal and pain
    assert_eq!(lines.count(), 5);
}

#[test]
fn audit_prints_one_line_per_ablation() {
    let root = tempfile::tempdir().unwrap();
    let out = sentience(root.path(), &["audit", &cfg("pain"), "--channel", "pain"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("none,pain,true,"));
    assert!(lines[2..].iter().all(|l| l.split(',').nth(2) == Some("false")));
}

#[test]
fn validation_errors_exit_with_one() {
    let root = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["run".into(), "/no/such/config.toml".into()],
        vec!["audit".into(), cfg("pain"), "--channel".into(), "touch".into()],
        vec!["sweep".into(), cfg("minimal"), "--grid".into(), "env.nope=1,2".into()],
        vec!["report".into(), root.path().join("empty").display().to_string()],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(sentience(root.path(), &args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn component_failures_exit_with_two() {
    let root = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(cfg("hallucination"))
        .unwrap()
        .replace("learning_rate = 0.05 }", "learning_rate = 0.05, train_horizon = 2 }");
    let broken = root.path().join("short-training.toml");
    std::fs::write(&broken, text).unwrap();
    let out = sentience(root.path(), &["run", &broken.display().to_string()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("taggers"));

    let blocked = root.path().join("a-file");
    std::fs::write(&blocked, "").unwrap();
    assert_eq!(sentience(&blocked, &["run", &cfg("minimal")]).status.code(), Some(2));
}
