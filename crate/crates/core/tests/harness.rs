use std::path::Path;

use sentience::harness::{
    compute_metrics, parse_grid, report, report_row, run, run_and_write, sweep, sweep_and_write, HarnessError,
    RunConfig, RunRecord, METRICS_CSV_HEADER,
};

fn config_text(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn config(name: &str) -> RunConfig {
    RunConfig::from_toml(&config_text(name)).unwrap()
}

fn read_record(dir: &Path) -> RunRecord {
    RunRecord::from_json(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn minimal_run_has_one_trace_and_zero_error() {
    let r = run(&config("minimal")).unwrap();
    assert_eq!(r.traces.len(), 1);
    assert_eq!(r.metrics.final_reality_error, Some(0.0));
    assert!(r.version.starts_with("sentience "));
}

#[test]
fn illusion_metrics_meet_scenario_thresholds() {
    let m = run(&config("illusion")).unwrap().metrics;
    assert!(m.final_reality_error.unwrap() < 0.05);
    assert!(m.final_percept_bias.unwrap() > 0.2);
}

#[test]
fn unknown_tagger_is_named_in_the_error() {
    let text = config_text("hallucination").replace(r#"kind = "temporal""#, r#"kind = "telepathic""#);
    match RunConfig::from_toml(&text) {
        Err(HarnessError::ConfigInvalid(msg)) => assert!(msg.contains("telepathic"), "{msg}"),
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

#[test]
fn dangling_references_are_config_errors() {
    let text = config_text("illusion").replace(r#"reference = "ruler""#, r#"reference = "sonar""#);
    let err = RunConfig::from_toml(&text).unwrap_err();
    assert!(matches!(err, HarnessError::ConfigInvalid(ref m) if m.contains("sonar")));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn run_is_bit_reproducible() {
    let cfg = config("illusion");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_and_write(&cfg, d.path()).unwrap();
    }
    for file in ["record.json", "reality_error.svg", "conflict.svg", "tag.svg"] {
        let a = std::fs::read(dirs[0].path().join("illusion").join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join("illusion").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn stored_metrics_are_recomputable_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["illusion", "hallucination", "pain"] {
        let (out, _) = run_and_write(&config(name), dir.path()).unwrap();
        let r = read_record(&out);
        let again = compute_metrics(&r.traces, &r.ground_truth, &r.config);
        assert_eq!(again, r.metrics, "{name}");
        assert_eq!(r.config_hash, r.config.hash());
    }
    let csv = report(dir.path()).unwrap();
    let mut rows = csv::Reader::from_path(csv).unwrap();
    for row in rows.records() {
        let row: Vec<String> = row.unwrap().iter().map(String::from).collect();
        let r = read_record(&dir.path().join(&row[1]));
        assert_eq!(row, report_row(&r));
    }
}

#[test]
fn report_header_matches_golden_file() {
    let golden = std::fs::read_to_string(format!("{}/tests/golden/metrics_header.csv", env!("CARGO_MANIFEST_DIR"))).unwrap();
    assert_eq!(golden.trim_end(), METRICS_CSV_HEADER.join(","));
    let dir = tempfile::tempdir().unwrap();
    run_and_write(&config("minimal"), dir.path()).unwrap();
    let text = std::fs::read_to_string(report(dir.path()).unwrap()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], golden.trim_end());
}

#[test]
fn plots_are_well_formed_xml() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = run_and_write(&config("illusion"), dir.path()).unwrap();
    for file in ["reality_error.svg", "conflict.svg", "tag.svg"] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().any(|n| n.tag_name().name() == "path"));
    }
}

#[test]
fn empty_directory_has_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let err = report(dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::EmptyRecords(_)));
}

#[test]
fn empty_grid_is_a_single_run() {
    let cells = sweep(&config("minimal"), &[]).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].seed, 1);
}

#[test]
fn grid_is_a_cartesian_product_with_offset_seeds() {
    let base = config("illusion");
    let axes = parse_grid(&["agent.channels.1.taggers.0.tau=0.1,1.0".into(), "env.sigma=0.0,0.02,0.05".into()]).unwrap();
    let cells = sweep(&base, &axes).unwrap();
    assert_eq!(cells.len(), 6);
    for (i, c) in cells.iter().enumerate() {
        assert_eq!(c.seed, base.seed + i as u64);
        assert_eq!(c.output_dir(), format!("illusion/cell-{i:03}"));
    }
    assert_eq!(cells[0].env.sigma, 0.0);
    assert_eq!(cells[5].env.sigma, 0.05);
}

#[test]
fn sweep_over_tau_writes_two_records() {
    let dir = tempfile::tempdir().unwrap();
    let axes = parse_grid(&["agent.channels.1.taggers.0.tau=0.1,1.0".into()]).unwrap();
    let out = sweep_and_write(&config("illusion"), &axes, dir.path()).unwrap();
    assert!(out.join("cell-000/record.json").exists());
    assert!(out.join("cell-001/record.json").exists());
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bad_grid_keys_are_rejected() {
    let base = config("minimal");
    for key in ["env.no_such_param=1", "agent.nowhere.alpha=1", "agent.channels.7.id=x", "seed"] {
        let err = parse_grid(&[key.into()]).and_then(|axes| sweep(&base, &axes)).unwrap_err();
        assert!(matches!(err, HarnessError::BadGridKey { .. }), "{key}: {err:?}");
        assert_eq!(err.exit_code(), 1);
    }
}
