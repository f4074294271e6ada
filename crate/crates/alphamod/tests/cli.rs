use std::process::Command;

fn alphamod() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alphamod"))
}

#[test]
fn regions_writes_raster_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("raster.csv");
    let run = || {
        alphamod()
            .args(["regions", "--d", "1", "--beta", "0.5", "--resolution", "21", "--out"])
            .arg(&out)
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(manifest["config"]["command"], "regions");
    assert_eq!(manifest["seed"], 0);
    let header = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "inv_p,inv_q,label,sufficient_s,boundary,necessary_s,gap,fix_time_s");
    let second: serde_json::Value = serde_json::from_slice(&run().stdout).unwrap();
    assert_eq!(manifest["outputs"], second["outputs"]);
}

#[test]
fn config_file_is_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("raster.csv");
    let config = dir.path().join("run.json");
    let body = serde_json::json!({"command": "regions", "d": 2, "beta": 1.5, "resolution": 11, "out": out});
    std::fs::write(&config, body.to_string()).unwrap();
    let o = alphamod().arg("--config").arg(&config).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 122);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = alphamod().args(["regions", "--d", "1", "--beta", "1", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta=1 excluded (wave case)"));
    assert!(!out.exists());

    // dt above the stiffness limit is a numeric failure
    let o = alphamod()
        .args(["nls4", "--dt", "0.05", "--T", "0.1", "--n", "512", "--out"])
        .arg(dir.path().join("t.bin"))
        .arg("--report")
        .arg(dir.path().join("e.csv"))
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(1) | Some(2)), "{:?}", o.status);
    assert!(!dir.path().join("t.bin").exists());

    let o = alphamod().args(["verify", "--only", "3,4"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS [3]"));
}

#[test]
fn nls4_energy_columns() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("energy.csv");
    let o = alphamod()
        .args(["nls4", "--scheme", "splitstep", "--dt", "1e-3", "--T", "0.01", "--out"])
        .arg(dir.path().join("traj.bin"))
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,M_u,E_u,M_v,E_v,E_tilde_v,monitored_quantity");
    assert_eq!(csv.lines().count(), 12);
    let traj = alphamod::nls4::Trajectory::load(dir.path().join("traj.bin")).unwrap();
    assert_eq!(traj.states.len(), 11);
}
