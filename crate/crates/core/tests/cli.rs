use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_discflux"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_config(sub: &str, cfg: &Path, out: &Path) -> Output {
    run(&[sub, "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()])
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has a line");
    serde_json::from_str(line).expect("stderr is JSON")
}

fn write_variant(dir: &Path, src: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(config(src)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from} not in {src}");
        text = text.replace(from, to);
    }
    let path = dir.join(src);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("solve");
    let res = run_config("solve", &config("flux_a_shock.toml"), &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["manifest.json", "timing.json", "snapshots.csv", "monitors.csv", "traces.csv"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let traces = fs::read_to_string(out.join("traces.csv")).unwrap();
    assert_eq!(traces.lines().next(), Some("t,u_left,u_right,p"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "solve");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["verdicts"]["max_principle"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(run_config("riemann", &config("flux_b_riemann.toml"), dir).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 3);
    for name in names.iter().filter(|n| *n != "timing.json") {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn off_edge_grid_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_variant(tmp.path(), "flux_a_shock.toml", &[("x_max = 4.0", "x_max = 5.0"), ("n_cells = 800", "n_cells = 802")]);
    let out = tmp.path().join("out");
    let res = run_config("solve", &cfg, &out);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "config");
    assert_eq!(err["field"], "grid.n_cells");
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn unknown_field_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_variant(tmp.path(), "flux_a_shock.toml", &[("seed = ", "colour = 3\nseed = ")]);
    let res = run_config("solve", &cfg, &tmp.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "config");
}

#[test]
fn numerical_failure_keeps_partial_artifacts() {
    // unbounded speeds leave no admissible time step
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_variant(
        tmp.path(),
        "flux_b_riemann.toml",
        &[("f = [0.0, 1.0, -1.0]", "f = [0.0, 0.0, 1e308]"), ("g = [0.0, 2.0, -2.0]", "g = [0.0, 0.0, 1e308]")],
    );
    let out = tmp.path().join("out");
    let res = run_config("solve", &cfg, &out);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(stderr_json(&res)["error"], "numerical");
    assert!(out.join("snapshots_partial.csv").is_file());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "numerical_failure");
    assert!(manifest["failure"]["message"].is_string());
}

#[test]
fn admissible_names_the_violated_condition() {
    let res = run(&["admissible", "--flux", "flux-b", "--shock", "0.1,0.7645751311064591,0.0"]);
    assert_eq!(res.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["grid"]["verdict"], false);
    assert_eq!(v["cases"]["verdict"], false);
    assert_eq!(v["grid"]["violated_condition"], "vi2");
    assert_eq!(v["agree"], true);

    let res = run(&["admissible", "--flux", "flux-b", "--shock", "0.1,0.7645751311064591,1.0"]);
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["grid"]["verdict"], true);
}

#[test]
fn admissible_rejects_bad_input() {
    let res = run(&["admissible", "--flux", "flux-z", "--shock", "0.1,0.2,0.3"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["field"], "--flux");
    let res = run(&["admissible", "--flux", "flux-b", "--shock", "0.1,0.2"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["admissible", "--flux", "flux-b", "--shock", "0.1,0.2,1.5"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn enumerate_writes_csv() {
    let res = run(&["enumerate", "--flux", "flux-b", "--n-states", "16", "--n-xi", "256"]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u_minus,u_plus,p,verdict,worst_margin,violated_condition"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
    assert!(rows.iter().any(|r| r.split(',').nth(3) == Some("true")));

    let tmp = tempfile::tempdir().unwrap();
    let res = run(&[
        "enumerate",
        "--config",
        config("flux_table.toml").to_str().unwrap(),
        "--n-states",
        "16",
        "--output-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(tmp.path().join("enumerate.csv").is_file());
}

#[test]
fn report_aggregates_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    let res = run(&["report", "--output-dir", root.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(s["runs"].as_array().unwrap().len(), 0);

    assert_eq!(run_config("solve", &config("flux_a_shock.toml"), &root.join("solve")).status.code(), Some(0));
    let res = run(&["report", "--output-dir", root.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(s["criteria"]["max_principle"], "pass");
    assert_eq!(s["criteria"]["residual"], "absent");
    assert!(root.join("summary.json").is_file());

    // a frozen inadmissible shock has a negative residual
    let res = run_config("residual", &config("frozen_inadmissible.toml"), &root.join("frozen"));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let res = run(&["report", "--output-dir", root.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    let s: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(s["criteria"]["residual"], "fail");
    assert_eq!(s["pass"], false);

    let res = run(&["report", "--output-dir", root.join("nowhere").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn every_shipped_config_validates() {
    use discflux::cli::config::{Needs, RunConfig};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate(Needs::FluxOnly).unwrap();
        n += 1;
    }
    assert!(n >= 8);
}
