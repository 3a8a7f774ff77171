use serde_json::{json, Value};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use symflow::config::{merge, resolve};
use symflow::presets::{preset, NAMES};
use symflow::run::{initial_mesh, simulate};
use symflow::{CliError, ExitCode};

fn symflow(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_symflow"));
    cmd.args(args);
    match out_dir {
        Some(d) => cmd.env("SYMFLOW_OUT_DIR", d),
        None => cmd.env_remove("SYMFLOW_OUT_DIR"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_graph() -> Value {
    json!({
        "ambient": {"kind": "product-spheres", "r1": 1.0, "r2": 1.0},
        "surface": {"shape": "contraction-map", "level": 2, "epsilon": 0.4},
        "flow": {"t_end": 0.05, "snapshot_every": 4},
        "diagnostics": {"probes": [{"center": [0, 0, 1, 0, 0, 1], "t0": 1.0, "cutoff": 2.0}]},
        "seed": 3
    })
}

#[test]
fn negative_radius_exits_with_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &json!({"preset": "theoremA", "ambient": {"r1": -1.0}}));
    let out = symflow(&["run", &cfg], Some(dir.path()));
    assert_eq!(out.status.code(), Some(ExitCode::Schema as i32));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ambient.r1"));
}

#[test]
fn schema_errors_carry_field_paths() {
    let err = resolve(r#"{"preset": "theoremA", "flow": {"cfll": 0.5}}"#).unwrap_err();
    assert!(err.path.starts_with("flow"), "{err}");
    let err = resolve(r#"{"preset": "nope"}"#).unwrap_err();
    assert_eq!(err.path, "preset");
    let err = resolve(r#"{"preset": "theoremA", "diagnostics": {"probes": [{"center": [0, 0, 0, 0], "t0": 1}]}}"#)
        .unwrap_err();
    assert_eq!(err.path, "diagnostics.probes[0].center");
    let err =
        resolve(r#"{"ambient": {"kind": "euclidean4"}, "surface": {"shape": "diagonal", "level": 2}}"#).unwrap_err();
    assert_eq!(err.path, "surface.shape");
    assert!(resolve("[1, 2]").is_err());
}

#[test]
fn every_preset_resolves() {
    for name in NAMES {
        let (cfg, raw) = resolve(&format!(r#"{{"preset": "{name}"}}"#)).unwrap();
        assert_eq!(cfg.preset.as_deref(), Some(name));
        assert_eq!(raw, json!({"preset": name}));
        let mut expected = preset(name).unwrap();
        expected.preset = Some(name.to_string());
        assert_eq!(cfg, expected);
    }
}

#[test]
fn merging_replaces_a_switched_variant() {
    let mut base = json!({"surface": {"shape": "factor-sphere", "level": 2, "point": [0, 0, 1]}, "flow": {"cfl": 0.5}});
    merge(&mut base, json!({"surface": {"shape": "diagonal", "level": 3}, "flow": {"t_end": 2.0}}));
    assert_eq!(base["surface"], json!({"shape": "diagonal", "level": 3}));
    assert_eq!(base["flow"], json!({"cfl": 0.5, "t_end": 2.0}));
    let mut base = json!({"surface": {"shape": "round-sphere", "level": 2, "radius": 1.0}});
    merge(&mut base, json!({"surface": {"level": 4}}));
    assert_eq!(base["surface"], json!({"shape": "round-sphere", "level": 4, "radius": 1.0}));
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_graph());
    let out_dir = dir.path().join("out");
    let out = symflow(&["run", &cfg], Some(&out_dir));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let steps = manifest["steps"].as_u64().unwrap() as usize;
    assert!(steps > 0);
    assert_eq!(manifest["stop"], "reached-t_end");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(line_count(&out_dir.join("run.csv")), steps + 1);
    let csv = fs::read_to_string(out_dir.join("run.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,dt,area,min_eta1,min_eta2,min_mu,max_A2,max_H,eta_residual,density_0,windowed_0"
    );
    let snapshots = line_count(&out_dir.join("snapshots.jsonl"));
    assert_eq!(snapshots, 1 + steps / 4 + usize::from(!steps.is_multiple_of(4)));
    assert_eq!(line_count(&out_dir.join("probes.csv")), snapshots + 1);
    let t_end: f64 = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((t_end - 0.05).abs() < 1e-12);
}

#[test]
fn runs_are_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_graph();
    cfg["surface"]["perturbation"] = json!(0.1);
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(symflow(&["run", &cfg], Some(&a)).status.code(), Some(0));
    assert_eq!(symflow(&["run", &cfg], Some(&b)).status.code(), Some(0));
    for f in ["run.csv", "probes.csv", "snapshots.jsonl", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_changes_the_perturbation() {
    let mut cfg = small_graph();
    cfg["surface"]["perturbation"] = json!(0.1);
    let (a, _) = resolve(&cfg.to_string()).unwrap();
    cfg["seed"] = json!(4);
    let (b, _) = resolve(&cfg.to_string()).unwrap();
    let amb = a.ambient.build().unwrap();
    assert_ne!(initial_mesh(&a, &amb).unwrap().positions(), initial_mesh(&b, &amb).unwrap().positions());
}

#[test]
fn stored_snapshots_can_seed_a_run_and_be_probed() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let cfg = write_config(dir.path(), "c.json", &small_graph());
    assert_eq!(symflow(&["run", &cfg], Some(&first)).status.code(), Some(0));
    let snaps = first.join("snapshots.jsonl");

    let mut again = small_graph();
    again["surface"] = json!({"shape": "mesh", "path": snaps});
    let cfg = write_config(dir.path(), "d.json", &again);
    let out = symflow(&["run", &cfg], Some(&dir.path().join("second")));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let probe_csv = dir.path().join("probe.csv");
    let out = symflow(
        &["probe", snaps.to_str().unwrap(), "--y0", "0,0,1,0,0,1", "--t0", "1", "--out", probe_csv.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(line_count(&probe_csv), line_count(&snaps) + 1);
    let out = symflow(&["probe", snaps.to_str().unwrap(), "--y0", "0,0,1", "--t0", "1"], None);
    assert_eq!(out.status.code(), Some(ExitCode::Schema as i32));
    let out = symflow(&["probe", "/nonexistent.jsonl", "--y0", "0,0,0,0", "--t0", "1"], None);
    assert_eq!(out.status.code(), Some(ExitCode::Io as i32));
}

#[test]
fn verify_forms_detects_a_sign_flip() {
    let ok = symflow(&["verify-forms", "--batch", "50", "--seed", "9"], None);
    assert_eq!(ok.status.code(), Some(0));
    let bad = symflow(&["verify-forms", "--batch", "50", "--seed", "9", "--inject-sign-flip"], None);
    assert_eq!(bad.status.code(), Some(ExitCode::CriteriaFailed as i32));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("adapted_basis"));
}

#[test]
fn empty_verify_batch_passes_with_a_warning() {
    let out = symflow(&["verify-forms", "--batch", "0"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn exit_codes_follow_the_outcome() {
    let sphere = |flow: Value, criteria: Value| {
        json!({
            "ambient": {"kind": "euclidean4"},
            "surface": {"shape": "round-sphere", "level": 2, "radius": 1.0},
            "flow": flow,
            "diagnostics": {"residual": false},
            "criteria": criteria,
        })
    };
    let code = |v: Value| match simulate(&resolve(&v.to_string()).unwrap().0) {
        Ok(sim) => sim.exit,
        Err(e) => e.exit_code(),
    };
    assert_eq!(code(sphere(json!({"t_end": 0.02}), json!({}))), ExitCode::Success);
    assert_eq!(code(sphere(json!({"t_end": 1.0, "blowup_a2": 5.0}), json!({}))), ExitCode::BlowUp);
    assert_eq!(
        code(sphere(json!({"t_end": 1.0, "blowup_a2": 5.0}), json!({"expect_stop": ["blow-up"]}))),
        ExitCode::Success
    );
    assert_eq!(code(sphere(json!({"t_end": 0.02, "min_angle_deg": 59.0}), json!({}))), ExitCode::Numerical);
    assert_eq!(code(sphere(json!({"t_end": 1.0, "max_steps": 2}), json!({}))), ExitCode::Numerical);
    assert_eq!(code(sphere(json!({"t_end": 0.02}), json!({"final_max_h": 1e-9}))), ExitCode::CriteriaFailed);
    assert_eq!(
        code(sphere(json!({"t_end": 0.02}), json!({"singular_time": {"expected": 0.25, "rel_tol": 0.1}}))),
        ExitCode::CriteriaFailed
    );
}

#[test]
fn steep_maps_are_refused_at_load() {
    let mut cfg = small_graph();
    cfg["surface"] = json!({"shape": "contraction-map", "level": 2, "epsilon": 2.5, "max_jacobian": 0.5});
    let err = simulate(&resolve(&cfg.to_string()).unwrap().0).unwrap_err();
    assert!(matches!(&err, CliError::Schema(e) if e.path == "surface.max_jacobian"), "{err}");
    assert_eq!(err.exit_code(), ExitCode::Schema);
}

#[test]
fn missing_config_is_an_io_error() {
    let out = symflow(&["run", "/nonexistent/config.json"], None);
    assert_eq!(out.status.code(), Some(ExitCode::Io as i32));
}

#[test]
fn blow_up_adds_an_automatic_probe() {
    let cfg = json!({
        "ambient": {"kind": "euclidean4"},
        "surface": {"shape": "round-sphere", "level": 2, "radius": 1.0},
        "flow": {"t_end": 1.0, "blowup_a2": 20.0, "snapshot_every": 5},
        "diagnostics": {"residual": false, "auto_probe": true},
        "criteria": {"expect_stop": ["blow-up"]}
    });
    let sim = simulate(&resolve(&cfg.to_string()).unwrap().0).unwrap();
    assert_eq!(sim.exit, ExitCode::Success);
    assert_eq!(sim.probes.len(), 1);
    assert!((sim.probes[0].t0() - 0.25).abs() < 0.02);
    assert!(!sim.probe_rows.is_empty());
    assert!(sim.probe_rows.iter().all(|r| r.t < sim.probes[0].t0() && r.density > 0.0));
}
