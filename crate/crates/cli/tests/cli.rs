use std::path::Path;
use std::process::{Command, Output};

fn flocklab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flocklab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_and_shows_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = flocklab(&["presets"], dir.path());
    assert!(o.status.success());
    let names = stdout(&o);
    assert!(names.lines().any(|l| l == "two_agent_worked"));
    assert!(names.lines().any(|l| l == "mt_all_to_all"));

    let o = flocklab(&["presets", "--show", "consensus"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["name"], "consensus");

    let o = flocklab(&["presets", "--show", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_a_preset_into_the_requested_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = flocklab(
        &["run", "two_agent_worked", "--output-dir", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: pass"));
    for f in ["diagnostics.csv", "verdict.json", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn default_output_directory_is_runs_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = flocklab(&["run", "consensus", "-q"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(dir.path().join("runs/consensus/diagnostics.csv").is_file());
}

#[test]
fn snapshot_flag_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = flocklab(&["run", "two_agent_worked", "--snapshot-every", "4", "-q"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("runs/two_agent_worked/trajectory.jsonl")).unwrap();
    // steps 0, 4, 8 for two agents
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn seed_override_changes_the_output_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    flocklab(
        &["run", "flock_beta_one", "-q", "--output-dir", a.to_str().unwrap()],
        dir.path(),
    );
    let o = flocklab(
        &[
            "run",
            "flock_beta_one",
            "-q",
            "--seed",
            "99",
            "--output-dir",
            b.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let ca = std::fs::read(a.join("diagnostics.csv")).unwrap();
    let cb = std::fs::read(b.join("diagnostics.csv")).unwrap();
    assert_ne!(ca, cb);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    assert_eq!(m["config"]["seed"], 99);
}

#[test]
fn same_seed_gives_identical_csv_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = flocklab(
            &[
                "--threads",
                threads,
                "run",
                "flock_beta_quarter",
                "-q",
                "--output-dir",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"name": "bad", "seed": 1, "domain": {"kind": "free", "dim": 1}, "N": 2,
            "model": {"variant": "cs_discrete", "kernel": {"family": "metric_powerlaw", "beta": 0}},
            "step": {"mode": "fixed", "dt_fixed": 0.1}, "T_final": 1,
            "init": {"positions": {"kind": "uniform_box"}, "velocities": {"kind": "gaussian", "std": 1.0}},
            "colour": "blue"}"#,
    )
    .unwrap();
    for cmd in ["validate", "run"] {
        let o = flocklab(&[cmd, path.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    }
    let o = flocklab(&["run", "no_such_thing"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cfl_violation_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = flocklab(&["presets", "--show", "two_agent_worked"], dir.path());
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["step"]["dt_fixed"] = serde_json::json!(2.0);
    let path = dir.path().join("cfl.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = flocklab(&["validate", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = flocklab(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("CFL"), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: error"));
    let verdict = std::fs::read_to_string(dir.path().join("runs/two_agent_worked/verdict.json")).unwrap();
    assert!(verdict.contains("\"error\""));
}

#[test]
fn envelope_violation_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = flocklab(&["presets", "--show", "two_agent_worked"], dir.path());
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // RK4 amplifies the velocity gap by 1.375 per step at this step size
    v["model"]["variant"] = serde_json::json!("semi_discrete_cs");
    v["step"]["dt_fixed"] = serde_json::json!(3.0);
    v["T_final"] = serde_json::json!(6.0);
    v["envelopes"] = serde_json::json!([{"kind": "semidiscrete"}]);
    let path = dir.path().join("unstable.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let o = flocklab(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("VIOLATED"));
}
