use std::path::Path;
use std::process::{Command, Output};

fn wsnloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsnloc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["generate", "-o", path(&out)];
    args.extend_from_slice(extra);
    let o = wsnloc(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn generate_random_writes_deployment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dep.json");
    let o = wsnloc(&["generate", "--topology", "random", "--n", "64", "--r", "0.5", "--seed", "1", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "n=64 kind=random seed=1");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["positions"].as_array().unwrap().len(), 64);
    assert_eq!(v["kind"], "random");
}

#[test]
fn generate_square_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(
        dir.path(),
        "grid.json",
        &["--topology", "square-grid", "--side", "8", "--noise-std", "0.00625", "--seed", "3"],
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["n"], 64);
    assert_eq!(v["kind"], "square_grid");
}

#[test]
fn missing_required_flag_is_usage_error() {
    let o = wsnloc(&["generate", "--topology", "random"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = wsnloc(&["generate", "--topology", "triangle", "-o", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_generator_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dep.json");
    let o = wsnloc(&["generate", "--topology", "square-grid", "--side", "0", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn localize_sdp_prints_json_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--n", "30", "--seed", "4"]);
    let o = wsnloc(&["localize", "--in", path(&dep), "--range", "0.25", "--anchors", "6", "--algo", "sdp", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let v: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(v["algorithm"], "sdp");
    assert_eq!(v["positions"].as_array().unwrap().len(), 30);
    assert_eq!(v["converged"], true);
    let summary = lines.next().unwrap();
    assert!(summary.starts_with("algorithm=sdp error_over_R="), "{summary}");
    assert!(summary.contains("connectivity="));
}

#[test]
fn localize_mds_hop_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--seed", "5"]);
    let res = dir.path().join("res.json");
    let o = wsnloc(&[
        "localize", "--in", path(&dep), "--range", "0.25", "--anchors", "6", "--algo", "mds-map", "--mode", "hop", "-o",
        path(&res),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("algorithm=mds_map"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res).unwrap()).unwrap();
    assert_eq!(v["algorithm"], "mds_map");
}

#[test]
fn localize_sdp_hop_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--seed", "5"]);
    let o = wsnloc(&["localize", "--in", path(&dep), "--range", "0.25", "--anchors", "6", "--algo", "sdp", "--mode", "hop"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("measured distances"));
}

#[test]
fn disconnected_graph_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--seed", "1"]);
    let o = wsnloc(&["localize", "--in", path(&dep), "--range", "0.02", "--anchors", "4", "--algo", "mds-map"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("disconnected"));
}

#[test]
fn too_few_anchors_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--seed", "1"]);
    let o = wsnloc(&["localize", "--in", path(&dep), "--range", "0.3", "--algo", "mds-map"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sdp_iteration_limit_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let dep = generate(dir.path(), "dep.json", &["--topology", "random", "--n", "40", "--seed", "6"]);
    let o = wsnloc(&[
        "localize", "--in", path(&dep), "--range", "0.25", "--anchors", "4", "--algo", "sdp", "--max-iter", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("warning:"));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(v["converged"], false);
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 36, "radio_ranges": [0.25, 0.3], "anchor_counts": [4, 6], "rounds": 2, "base_seed": 9}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn sweep_writes_report_and_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out.csv");
    let o = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&out), "--figure", "fig4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "topology,range,anchors,algorithm,mean_error_over_R,stddev,mean_connectivity,rounds,regenerated,nonconverged"
    );
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1..].iter().all(|l| l.starts_with("square_grid,")));
    let fig = std::fs::read_to_string(dir.path().join("out_fig4.csv")).unwrap();
    assert!(fig.starts_with("connectivity,error_over_R,algorithm,anchors\n"));
    assert_eq!(fig.lines().count(), 9);
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let oa = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&a), "--jobs", "1"]);
    let ob = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&b), "--jobs", "3"]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out.csv");
    let o = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&out), "--rounds", "1", "--topology", "hex-grid", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "hex_grid");
    assert_eq!(row[7], "1");
}

#[test]
fn schema_violations_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"rounds": 0, "anchor_counts": [2], "topology": "ring"}"#).unwrap();
    let o = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for field in ["rounds", "anchor_counts", "topology"] {
        assert!(err.contains(field), "{err}");
    }

    std::fs::write(&cfg, r#"{"rounds": 2, "colour": "red"}"#).unwrap();
    let o = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn missing_config_exits_two() {
    let o = wsnloc(&["sweep", "--config", "/nonexistent/cfg.json", "-o", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_sweep_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"radio_ranges": [0.01], "anchor_counts": [4], "rounds": 1, "algorithms": ["mds_map"]}"#)
        .unwrap();
    let o = wsnloc(&["sweep", "--config", path(&cfg), "-o", path(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(3));
}
