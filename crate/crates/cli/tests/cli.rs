use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wlsbx(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlsbx"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn wlsbx")
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_one_row_per_bss() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["simulate", "--duration", "2", "--trace"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path().join("throughput.csv"));
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "bss_id,thr_mbps,airtime,collisions,mean_sinr");
    assert_eq!(lines.len(), 3);
    assert!(read(dir.path().join("trace.csv")).lines().count() > 100);
    let manifest = read(dir.path().join("simulate.manifest.json"));
    assert!(manifest.contains("\"command\": \"simulate\""));
    assert!(!manifest.contains("time\""));
}

#[test]
fn learn_trace_has_a_row_per_iteration_and_bss() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(
        dir.path(),
        &["learn", "--policy", "ucb1", "--iterations", "15", "--iter-duration", "0.2", "--reward", "own"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path().join("learning_trace.csv"));
    assert_eq!(csv.lines().next(), Some("iter,bss_id,power_dbm,thr_mbps,reward"));
    assert_eq!(csv.lines().count(), 1 + 15 * 2);
}

#[test]
fn oracle_ranks_all_36_pairs_with_low_power_first() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["oracle", "--seeds", "2", "--duration", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path().join("oracle.csv"));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 36);
    let best: Vec<f64> = rows[0][0].split(';').map(|p| p.parse().unwrap()).collect();
    assert!(best.iter().all(|p| *p < 23.0), "{best:?}");
    let means: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(means.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn oracle_over_cap_exits_4_and_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["oracle", "--cap", "35"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("--cap 36"), "{}", stderr(&o));
}

#[test]
fn single_power_level_oracle_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: serde_json::Value = serde_json::from_str(&wlan_sandbox::wlan::canonical_scenario().to_json_string()).unwrap();
    s["power_levels"] = serde_json::json!([23.0]);
    let path = dir.path().join("one.json");
    fs::write(&path, s.to_string()).unwrap();
    let o = wlsbx(dir.path(), &["oracle", "--scenario", path.to_str().unwrap(), "--seeds", "1", "--duration", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(dir.path().join("oracle.csv")).lines().count(), 2);
}

#[test]
fn sweep_has_one_row_per_duration() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["sweep", "--durations", "0.5,1,2", "--seeds", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path().join("sweep.csv"));
    assert_eq!(csv.lines().next(), Some("duration_s,mean_exec_ms,cov"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn unsorted_sweep_durations_are_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["sweep", "--durations", "5,1", "--seeds", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"nodes\": 3\n}").unwrap();
    let o = wlsbx(dir.path(), &["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("nodes") && e.contains("line 2"), "{e}");
}

#[test]
fn unknown_policy_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wlsbx(dir.path(), &["learn", "--policy", "softmax"]).status.code(), Some(2));
}

#[test]
fn pipeline_defaults_deploy_and_rerun_grows_history() {
    let dir = tempfile::tempdir().unwrap();
    let o = wlsbx(dir.path(), &["pipeline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mon: serde_json::Value = serde_json::from_str(&read(dir.path().join("monitoring_report.json"))).unwrap();
    assert!(mon["improvement_pct"].as_f64().unwrap() > 0.0);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("sandbox_report.json"))).unwrap();
    let id = report["model_id"].as_str().unwrap().to_string();
    let history = |d: &Path| {
        let m: serde_json::Value = serde_json::from_str(&read(d.join("marketplace").join(format!("{id}.json")))).unwrap();
        m["history"].as_array().unwrap().len()
    };
    let before = history(dir.path());
    let o = wlsbx(dir.path(), &["pipeline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(history(dir.path()), before + 1);
}

#[test]
fn empty_marketplace_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("empty");
    fs::create_dir(&m).unwrap();
    let o = wlsbx(dir.path(), &["pipeline", "--marketplace", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn exhausted_pipeline_exits_3_and_keeps_attempts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    fs::write(&cfg, r#"{"threshold_pct": 1000, "max_models": 2, "seeds": [1], "eval": {"iterations": 10, "iter_duration_s": 0.2, "measure_duration_s": 0.5, "measure_runs": 1}}"#).unwrap();
    let o = wlsbx(dir.path(), &["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(read(dir.path().join("attempts.csv")).lines().count(), 3);
    assert!(!dir.path().join("monitoring_report.json").exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    fs::write(&cfg, r#"{"treshold_pct": 10}"#).unwrap();
    let o = wlsbx(dir.path(), &["pipeline", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("treshold_pct"), "{}", stderr(&o));
}

#[test]
fn init_outputs_are_valid_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(wlsbx(dir.path(), &["init"]).status.success());
    for f in ["scenario.json", "pipeline.json", "marketplace/eps-greedy-tpc.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let sc = dir.path().join("scenario.json");
    let o = wlsbx(&dir.path().join("run"), &["simulate", "--scenario", sc.to_str().unwrap(), "--duration", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn manifest_alone_reproduces_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = wlsbx(&a, &["--seed", "9", "learn", "--iterations", "10", "--iter-duration", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = a.join("learn.manifest.json");
    let o = wlsbx(&b, &["rerun", "--manifest", m.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(a.join("learning_trace.csv")), read(b.join("learning_trace.csv")));
    assert_eq!(read(&m), read(b.join("learn.manifest.json")));
}
