use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aniso_lab::config::{ConfigError, ExperimentConfig};
use aniso_lab::snapshot::{read_solution, snapshot_path, write_solution, Snapshot};
use aniso_core::solver::InitialData;
use aniso_core::{Boundary, Grid, GridSolution, PowerVector};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aniso-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn constant_config(out: &Path) -> Value {
    json!({
        "dimension": 2,
        "p": [2.2, 2.4],
        "domain": {"lower": [0, 0], "upper": [1, 1]},
        "grid": [16, 16],
        "bc": "periodic",
        "initial": {"constant": 0.7},
        "snapshots": [0.0, 0.01, 0.02, 0.03],
        "harnack": {"rho": [0.05], "times": [0.01, 0.02], "stride": 2, "containment_factor": 1.0},
        "hoelder": {"apex": {"x": [0.5, 0.5], "t": 0.03}, "rho0": 0.1, "c": 1.0, "gamma": 1.5, "n_max": 3},
        "out_dir": out,
        "seed": 3
    })
}

fn bump_config(out: &Path) -> Value {
    json!({
        "dimension": 2,
        "p": [2.2, 2.4],
        "domain": {"lower": [-1, -1], "upper": [1, 1]},
        "grid": [24, 24],
        "bc": "zero_flux",
        "initial": {"bump": {"center": [0, 0], "halfwidths": [0.7, 0.7], "amplitude": 1.0, "floor": 0.05}},
        "snapshots": [0.0, 0.02, 0.04, 0.06, 0.08, 0.1],
        "harnack": {"c": [0.5, 1.0], "rho": [0.05, 0.1], "times": [0.04, 0.06], "stride": 3, "gamma_check": 2.0},
        "hoelder": {
            "apex": {"x": [0.02, 0.3], "t": 0.1}, "rho0": 0.3, "c": 0.5, "n_max": 4,
            "seminorm": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5], "t_lower": 0.04, "t_upper": 0.08, "alpha": 0.5, "pairs": 200}
        },
        "out_dir": out,
        "seed": 11
    })
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn listing(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn geometry_examples() {
    let o = run(&["geometry", "--p", "2,2", "--rho", "1", "--theta", "7"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["halfwidths"], json!([1.0, 1.0]));
    assert_eq!(v["volume"], json!(4.0));

    let o = run(&["geometry", "--p", "2.5,3.75", "--rho", "1", "--theta", "32"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let h: Vec<f64> = serde_json::from_value(v["halfwidths"].clone()).unwrap();
    assert!((h[0] - 0.5).abs() < 1e-12 && (h[1] - 2.0).abs() < 1e-12, "{h:?}");

    let o = run(&["geometry", "--p", "3,9"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["conditions"]["bounded_ok"], json!(false));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["geometry"]).status.code(), Some(2));
    assert_eq!(run(&["geometry", "--p", "2,x"]).status.code(), Some(2));
    assert_eq!(run(&["geometry", "--p", "1.5,2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--workers", "0", "geometry", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn negative_dims_fail_validation_without_writing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cfg = constant_config(&out);
    cfg["grid"] = json!([16, -4]);
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dims[1] = -4"));
    assert!(!out.exists());
}

#[test]
fn unknown_keys_fail_validation() {
    let dir = TempDir::new().unwrap();
    let mut cfg = constant_config(&dir.path().join("out"));
    cfg["snapshot"] = json!([0.0]);
    let path = write_config(dir.path(), "typo.json", &cfg);
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}

#[test]
fn validation_messages_are_distinct() {
    let base = constant_config(Path::new("unused"));
    let mut cases: Vec<Value> = Vec::new();
    let mut c = base.clone();
    c["p"] = json!([2.2]);
    cases.push(c);
    let mut c = base.clone();
    c["p"] = json!([1.5, 2.4]);
    cases.push(c);
    let mut c = base.clone();
    c["domain"]["upper"] = json!([1, 0]);
    cases.push(c);
    let mut c = base.clone();
    c["p"] = json!([2.4, 2.2]);
    cases.push(c);
    let mut c = base.clone();
    c["snapshots"] = json!([0.1, 0.05]);
    cases.push(c);
    let mut c = base.clone();
    c["harnack"]["times"] = json!([0.015]);
    cases.push(c);

    let errors: Vec<ConfigError> = cases
        .iter()
        .map(|c| ExperimentConfig::from_json(&c.to_string()).unwrap().validate().unwrap_err())
        .collect();
    assert!(matches!(errors[0], ConfigError::LengthMismatch { what: "p", .. }));
    assert!(matches!(errors[1], ConfigError::ExponentBelowTwo { index: 0, .. }));
    assert!(matches!(errors[2], ConfigError::NonpositiveSpacing { axis: 1, .. }));
    let messages: Vec<String> = errors.iter().map(ToString::to_string).collect();
    for (i, a) in messages.iter().enumerate() {
        for b in &messages[i + 1..] {
            assert_ne!(a, b);
        }
    }
}

#[test]
fn instability_exits_four() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "dimension": 1,
        "p": [40.0],
        "domain": {"lower": [0], "upper": [1]},
        "grid": [50],
        "bc": "zero_flux",
        "initial": {"spike": {"center": [0.5], "mass": 1e10}},
        "snapshots": [0.0, 0.1],
        "out_dir": dir.path().join("out")
    });
    let path = write_config(dir.path(), "blowup.json", &cfg);
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_snapshots_exit_five() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "c.json", &constant_config(&dir.path().join("nothing")));
    let o = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    let o = run(&["solve", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn mismatched_snapshots_fail_validation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(dir.path(), "c.json", &constant_config(&out));
    assert!(run(&["solve", "--config", path.to_str().unwrap()]).status.success());
    let mut cfg = constant_config(&out);
    cfg["domain"]["upper"] = json!([2, 1]);
    let path = write_config(dir.path(), "other.json", &cfg);
    assert_eq!(run(&["verify", "--config", path.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn zero_horizon_gives_initial_data() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cfg = bump_config(&out);
    cfg["snapshots"] = json!([0.0]);
    cfg.as_object_mut().unwrap().remove("harnack");
    cfg.as_object_mut().unwrap().remove("hoelder");
    let path = write_config(dir.path(), "t0.json", &cfg);
    assert!(run(&["solve", "--config", path.to_str().unwrap()]).status.success());
    assert!(!snapshot_path(&out.join("snapshots"), 1).exists());
    let snap = Snapshot::read(&snapshot_path(&out.join("snapshots"), 0)).unwrap();
    let parsed = ExperimentConfig::from_json(&cfg.to_string()).unwrap();
    let u0 = parsed.initial_field(&parsed.grid().unwrap()).unwrap();
    assert_eq!(snap.time, 0.0);
    assert!(snap.values.iter().zip(&u0).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn snapshot_round_trip_is_bit_identical() {
    let dir = TempDir::new().unwrap();
    let grid = Grid::covering(&[-1.0, 0.0], &[1.0, 0.5], vec![7, 5], Boundary::ZeroFlux).unwrap();
    let p = PowerVector::new(vec![2.0, 3.0]).unwrap();
    let fields: Vec<Vec<f64>> =
        (0..3).map(|k| InitialData::Random { max: 1.0 + k as f64, seed: k }.sample(&grid).unwrap()).collect();
    let sol = GridSolution::new(grid, p.clone(), vec![0.0, 0.1 / 3.0, 0.2], fields).unwrap();
    write_solution(dir.path(), &sol).unwrap();
    let back = read_solution(dir.path(), 3, p, Boundary::ZeroFlux).unwrap();
    assert_eq!(back.grid(), sol.grid());
    for (a, b) in back.times().iter().zip(sol.times()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    for (fa, fb) in back.fields().iter().zip(sol.fields()) {
        assert!(fa.iter().zip(fb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn constant_solution_verifies_trivially() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let path = write_config(dir.path(), "c.json", &constant_config(&out));
    let o = run(&["all", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("gamma_forward=1 gamma_backward=1"), "{}", stdout(&o));

    let osc = fs::read_to_string(out.join("oscillation.csv")).unwrap();
    let mut lines = osc.lines();
    assert_eq!(lines.next(), Some("n,rho_n,time_length_n,osc_n,bound_n,pass"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[3], "0");
        assert_eq!(cols[5], "true");
    }
    let csv = fs::read_to_string(out.join("harnack.csv")).unwrap();
    assert!(csv.starts_with(
        "x0,x1,t0,u0,rho,c,theta,forward_inf,forward_ratio,backward_sup,backward_ratio,censored_reason\n"
    ));
}

#[test]
fn fully_censored_sweep_is_an_operational_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cfg = constant_config(&out);
    cfg["harnack"]["rho"] = json!([5.0]);
    cfg.as_object_mut().unwrap().remove("hoelder");
    let path = write_config(dir.path(), "c.json", &cfg);
    assert!(run(&["solve", "--config", path.to_str().unwrap()]).status.success());
    let o = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.join("harnack.csv").exists());
}

#[test]
fn reports_are_reproducible_and_overrides_apply() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "b.json", &bump_config(&dir.path().join("ignored")));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["all", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!dir.path().join("ignored").exists());
    let la = listing(&a);
    assert!(la.iter().any(|(p, _)| p == Path::new("oscillation_summary.json")));
    assert_eq!(la, listing(&b));

    let summary: Value = serde_json::from_slice(&fs::read(a.join("oscillation_summary.json")).unwrap()).unwrap();
    assert!(summary["seminorm"]["value"].as_f64().unwrap().is_finite());
}
