use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carleman-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn verify_ops_writes_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let st = lab().args(["verify-ops", "--set", "verify_ops.cases=20", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["config.toml", "seed.txt", "identities.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["suite"], "verify-ops");
    assert!(summary["wall_time_s"].is_number());
    assert!(summary["assertions"].as_array().unwrap().iter().all(|a| a["pass"] == true));
    let snapshot = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(snapshot.contains("cases = 20"));
}

#[test]
fn malformed_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let bad = write(tmp.path(), "bad.toml", "[weight]\ntua = 3.0\n");
    let o = lab().args(["energy", "--config"]).arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tua"));
    let broken = write(tmp.path(), "broken.toml", "[time\nsteps = 4\n");
    assert_eq!(lab().args(["energy", "--config"]).arg(&broken).status().unwrap().code(), Some(2));
    let o = lab().args(["energy", "--set", "time.steps=\"many\""]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
    assert_eq!(lab().args(["energy", "--set", "weight.delta=0.9"]).status().unwrap().code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failed_assertions_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let st = lab().args(["converge", "--set", "converge.min_order=3.5", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(1));
    assert!(out.join("summary.json").exists());
}

#[test]
fn stability_grids_flag_gives_a_three_row_decay_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let st = lab()
        .args(["stability", "--grids", "16,32,64", "--set", "stability.runs=4", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let mut r = csv::Reader::from_path(out.join("decay.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let hs: Vec<f64> = rows.iter().map(|row| row[1].parse().unwrap()).collect();
    assert_eq!(hs, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]);
    let header = csv::Reader::from_path(out.join("stability.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["run_id", "h", "N", "d", "tau", "delta", "lambda", "lhs", "rhs_observed", "rhs_error_term", "quotient", "seed"]
    );
}

#[test]
fn snapshot_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let st = lab().args(["carleman", "--set", "carleman.runs=6", "--set", "seed=77", "--out"]).arg(&a).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let st = lab().args(["carleman", "--config"]).arg(a.join("config.toml")).arg("--out").arg(&b).status().unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["carleman.csv", "feasibility.csv", "weights.csv", "config.toml", "seed.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = csv::Reader::from_path(a.join("feasibility.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["h", "tau", "delta", "lambda", "p", "I_p", "J_p", "rhs_source", "rhs_local", "rhs_endpoint", "ratio", "admissible"]
    );
}

#[test]
fn reconstruct_exports_a_readable_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(lab().args(["reconstruct", "--out"]).arg(&out).status().unwrap().code(), Some(0));
    let text = std::fs::read(out.join("source_twin.traj")).unwrap();
    let tr = carleman_lab::io::read_trajectory(text.as_slice()).unwrap();
    assert_eq!(tr.grid().n(), 15);
    let mut again = Vec::new();
    carleman_lab::io::write_trajectory(&mut again, &tr).unwrap();
    assert_eq!(text, again);
}
