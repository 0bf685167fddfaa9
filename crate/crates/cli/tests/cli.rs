use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nhvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhvi"))
        .args(args)
        .env("NHVI_LOG", "off")
        .output()
        .expect("spawn nhvi")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn config(name: &str) -> String {
    configs().join(format!("{name}.json")).display().to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn ellipse_short_run_has_one_impact() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = nhvi(&["run", "--config", &config("ellipse"), "--t-final", "2", "--out", out_dir]);
    assert_ok(&out);
    let s = summary(dir.path());
    assert_eq!(s["report"]["impact_count"], 1);
    assert_eq!(s["config"]["t_final"], 2.0);

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    // Header plus N + 1 nodes.
    assert_eq!(csv.lines().count(), 1 + 200 + 1);
    assert!(csv.starts_with("k,t,q_theta,q_x,q_y,v_theta,v_x,v_y,p_theta,p_x,p_y,E,c,max_omega_residual\n"));
    let impacts = fs::read_to_string(dir.path().join("impacts.csv")).unwrap();
    assert_eq!(impacts.lines().count(), 2);
    for svg in ["energy.svg", "coordinates.svg", "plane_trajectory.svg"] {
        let text = fs::read_to_string(dir.path().join(svg)).unwrap();
        assert!(text.starts_with("<svg") && text.contains("<polyline"), "{svg}");
    }
}

#[test]
fn pendulum_demo_has_three_impacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhvi(&["demo", "pendulum", "--out", dir.path().to_str().unwrap()]);
    assert_ok(&out);
    assert_eq!(summary(dir.path())["report"]["impact_count"], 3);
}

#[test]
fn particle_demo_keeps_energy_across_impacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhvi(&["demo", "particle", "--out", dir.path().to_str().unwrap()]);
    assert_ok(&out);
    let report = &summary(dir.path())["report"];
    assert!(report["impact_count"].as_u64().unwrap() >= 2);
    assert!(report["max_energy_jump"].as_f64().unwrap() < 1e-8);
    assert!(report["min_boundary_gap"].as_f64().unwrap() >= -1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = nhvi(&["run", "--config", &config("ellipse"), "--t-final", "3", "--out", dir.path().to_str().unwrap()]);
        assert_ok(&out);
    }
    for file in ["trajectory.csv", "impacts.csv", "summary.json", "energy.svg"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn sweep_writes_one_directory_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = nhvi(&[
        "run",
        "--sweep",
        &config("particle"),
        &config("pendulum"),
        "--t-final",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_ok(&out);
    for name in ["particle", "pendulum"] {
        let s = summary(&dir.path().join(name));
        assert_eq!(s["model"], name);
    }
}

#[test]
fn invalid_config_exits_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("ellipse")).unwrap().replace("\"h\": 0.01", "\"h\": 0.01, \"dt\": 0.1");
    let path = dir.path().join("bad.json");
    fs::write(&path, text).unwrap();
    let out = nhvi(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("`dt`"), "{stderr}");
    assert!(!dir.path().join("summary.json").exists());

    let out = nhvi(&["demo", "ellipse", "--h", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn integrator_failure_writes_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    // One Newton iteration cannot converge on the pendulum's nonlinear steps.
    let text = fs::read_to_string(config("pendulum"))
        .unwrap()
        .replace("\"h\": 0.001,", "\"h\": 0.001, \"solver\": { \"max_iter\": 1 },");
    let path = dir.path().join("starved.json");
    fs::write(&path, text).unwrap();
    let out = nhvi(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let failure: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("failure.json")).unwrap()).unwrap();
    assert_eq!(failure["model"], "pendulum");
    assert!(failure["diagnostic"]["error"].is_string());
}

#[test]
fn validate_reports_each_check() {
    let out = nhvi(&["validate", "--config", &config("pendulum")]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["schema", "model", "initial_state", "derivatives", "boundary_frame"] {
        assert!(stdout.contains(&format!("ok   {name}:")), "{stdout}");
    }

    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("particle"))
        .unwrap()
        .replace("\"q0\": [0.0, 1.0]", "\"q0\": [0.0, -1.0]");
    let path = dir.path().join("below.json");
    fs::write(&path, text).unwrap();
    let out = nhvi(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL initial_state"));
}
