use std::path::Path;
use std::process::{Command, Output};

use mtcsim_core::solver::PolicySet;
use serde_json::{json, Value};

fn mtcsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtcsim"));
    cmd.args(args).env_remove("MTCSIM_SEED").env_remove("MTCSIM_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn mtcsim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn shown(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("config show prints JSON")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn config_show_prints_defaults() {
    let out = mtcsim(&["config", "show"], &[]);
    assert!(out.status.success());
    let v = shown(&out);
    assert_eq!(v["tx_power"], json!(0.1));
    assert_eq!(v["slots_per_frame"], json!(100));
}

#[test]
fn units_in_config_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"tx_power": "100 mW", "cpu_mec": "100 GHz", "task_cycles": "1000 Megacycles"}"#,
    );
    let out = mtcsim(&["config", "show", "--config", &cfg], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = shown(&out);
    assert_eq!(v["tx_power"], json!(0.1));
    assert_eq!(v["cpu_mec"], json!(1e11));
    assert_eq!(v["task_cycles"], json!(1e9));
}

#[test]
fn bad_config_exits_with_code_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"zeta": 0.7, "eta": 0.2}"#);
    let out = mtcsim(&["config", "show", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zeta"));

    let cfg = write_config(dir.path(), r#"{"tx_powr": 0.1}"#);
    let out = mtcsim(&["config", "show", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tx_powr"));

    let out = mtcsim(&["sweep", "--axis", "cycles", "--policies", "greedy"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_seed_and_output_dir() {
    let out = mtcsim(
        &["config", "show"],
        &[("MTCSIM_SEED", "99"), ("MTCSIM_OUT_DIR", "/tmp/elsewhere")],
    );
    let v = shown(&out);
    assert_eq!(v["seed"], json!(99));
    assert_eq!(v["output_dir"], json!("/tmp/elsewhere"));
    // flags win over the environment
    let out = mtcsim(&["config", "show", "--seed", "5"], &[("MTCSIM_SEED", "99")]);
    assert_eq!(shown(&out)["seed"], json!(5));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = mtcsim(&["config", "show", "--config", "/nonexistent/config.json"], &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = mtcsim(
        &[
            "sweep",
            "--axis",
            "mtcs",
            "--policies",
            "local_only",
            "--out",
            blocker.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oversized_oracle_is_refused_with_code_3() {
    let out = mtcsim(&["oracle", "--horizon", "9"], &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_prints_eleven_probes() {
    let out = mtcsim(&["oracle", "--grid-step", "0.01"], &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    for line in &lines[1..] {
        let diff: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(diff <= 5e-3, "{line}");
    }
}

#[test]
fn solve_then_run_with_saved_policies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"frames": 2, "slots_per_frame": 10, "mtc_count": 3, "grid_step": 0.05}"#,
    );
    let out_dir = dir.path().join("out");
    let out_s = out_dir.to_str().unwrap();
    let out = mtcsim(&["solve", "--config", &cfg, "--out", out_s], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let set = PolicySet::from_json(&std::fs::read_to_string(out_dir.join("policies.json")).unwrap()).unwrap();
    assert_eq!(set.policies.len(), 3);

    let policies = out_dir.join("policies.json");
    let out = mtcsim(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            out_s,
            "--policies",
            "pomdp,local_only",
            "--policy-file",
            policies.to_str().unwrap(),
            "--trace",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::fs::read_to_string(out_dir.join("run.csv")).unwrap();
    assert_eq!(run.lines().count(), 1 + 2 * 2);
    let trace = std::fs::read_to_string(out_dir.join("trace_pomdp.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frame,slot,mtc_id,action_sense,action_access,action_compute,obs,rb_truth_bitmask,exec_time_s,energy_j,cost"
    );
    assert_eq!(lines.count(), 2 * 10 * 3);

    // the same run without the file re-solves and must agree
    let again = dir.path().join("again");
    let out = mtcsim(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            again.to_str().unwrap(),
            "--policies",
            "pomdp,local_only",
        ],
        &[],
    );
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(again.join("run.csv")).unwrap(), run);
}

#[test]
fn sweep_mtcs_writes_one_row_per_value_policy_and_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = mtcsim(&["sweep", "--axis", "mtcs", "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep_mtcs.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "axis,policy,frame,mean_cost,total_cost,mean_time_s,mean_energy_j"
    );
    // two device counts, three default policies, ten frames
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 10);
}
