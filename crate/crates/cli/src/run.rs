//! Building the initial surface, running the flow and judging the criteria.

use crate::config::*;
use crate::error::{CliError, ExitCode};
use crate::output::{self, ProbeRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use symflow_core::ambient::{sphere_exp, AmbientModel};
use symflow_core::diagnostics::{
    density_of_mesh, huisken_monotonicity_check, localized_sample, DiagnosticsRecord, KernelProbe, Quadrature,
    RecordOptions,
};
use symflow_core::flow::{run_with, FlowConfig, RunOutcome, StopReason};
use symflow_core::mesh::{product_torus_r4, round_sphere_r4, MeshSnapshot, SurfaceMesh};
use symflow_core::surface::{graph_immersion, jacobians, shape_field, GraphMap};
use symflow_core::Vec6;

const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

/// Everything needed to start the flow.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub ambient: AmbientModel,
    pub mesh: SurfaceMesh,
    pub flow: FlowConfig,
    pub record: RecordOptions,
}

/// The contraction family with its seeded perturbation, sampled on an
/// icosphere of the given level.
pub fn contraction_map(
    level: u32,
    epsilon: f64,
    perturbation: f64,
    seed: u64,
    radii: (f64, f64),
) -> Result<GraphMap, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tilt: [[f64; 3]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)));
    let map = GraphMap::from_fn(level, radii.0, radii.1, |x| {
        let lin = |row: &[f64; 3]| row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
        let v = [epsilon * x[0] + perturbation * lin(&tilt[0]), epsilon * x[1] + perturbation * lin(&tilt[1]), 0.0];
        sphere_exp(&NORTH, &v, 1.0)
    })?;
    Ok(map)
}

fn to_vec6(c: &[f64]) -> Vec6 {
    Vec6::from_slice(c)
}

fn load_mesh(path: &Path, ambient: &AmbientModel) -> Result<SurfaceMesh, CliError> {
    let snap = output::read_snapshots(path)?.swap_remove(0);
    let format = |message: String| CliError::Format { path: path.into(), message };
    if snap.dim != ambient.embedding_dim() {
        return Err(format(format!("mesh has N = {}, ambient needs {}", snap.dim, ambient.embedding_dim())));
    }
    let topology =
        output::infer_topology(&snap).ok_or_else(|| format("mesh is neither a sphere nor a torus".into()))?;
    let mesh = snap.to_mesh(topology)?;
    if let Some(v) = mesh.positions().iter().position(|p| ambient.manifold_defect(p) > 1e-8) {
        return Err(format(format!("vertex {v} does not lie on the ambient manifold")));
    }
    Ok(mesh)
}

pub fn initial_mesh(config: &RunConfig, ambient: &AmbientModel) -> Result<SurfaceMesh, CliError> {
    let radii = ambient.radii().unwrap_or((1.0, 1.0));
    let mesh = match &config.surface {
        SurfaceSpec::RoundSphere { level, radius, center } => round_sphere_r4(*level, *radius, &to_vec6(center)),
        SurfaceSpec::ProductTorus { nu, nv, a, b } => product_torus_r4(*nu, *nv, *a, *b),
        SurfaceSpec::FactorSphere { level, point } => {
            graph_immersion(&GraphMap::from_fn(*level, radii.0, radii.1, |_| *point)?)
        }
        SurfaceSpec::Diagonal { level } => graph_immersion(&GraphMap::from_fn(*level, radii.0, radii.1, |x| *x)?),
        SurfaceSpec::ContractionMap { level, epsilon, perturbation, max_jacobian } => {
            let map = contraction_map(*level, *epsilon, *perturbation, config.seed, radii)?;
            if let Some(bound) = max_jacobian {
                let worst = jacobians(&map)?.into_iter().fold(0.0, |m: f64, j| m.max(j.abs()));
                if !(worst < *bound) {
                    return Err(SchemaError::new(
                        "surface.max_jacobian",
                        format!("initial max |Jac| = {worst} is not below {bound}"),
                    )
                    .into());
                }
            }
            graph_immersion(&map)
        }
        SurfaceSpec::Mesh { path } => load_mesh(path, ambient)?,
    };
    Ok(mesh)
}

pub fn probes(config: &RunConfig) -> Result<Vec<KernelProbe>, CliError> {
    config
        .diagnostics
        .probes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            KernelProbe::new(to_vec6(&p.center), p.t0, p.cutoff)
                .map_err(|e| SchemaError::new(format!("diagnostics.probes[{i}]"), e.to_string()).into())
        })
        .collect()
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    validate(config)?;
    let ambient = config.ambient.build()?;
    let flow = config.flow.build()?;
    let mesh = initial_mesh(config, &ambient)?;
    let record = RecordOptions {
        probes: probes(config)?,
        residual_form: config.diagnostics.residual_form.into(),
        laplacian: config.diagnostics.laplacian_kind(),
        compute_residual: config.diagnostics.residual,
        eta_floor: config.diagnostics.eta_floor,
    };
    Ok(Prepared { ambient, mesh, flow, record })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub passed: bool,
}

impl CriterionResult {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        CriterionResult { name: name.into(), value, limit: format!("<= {limit}"), passed: value <= limit }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        CriterionResult { name: name.into(), value, limit: format!(">= {limit}"), passed: value >= limit }
    }

    fn relative(name: &str, value: f64, r: &Relative) -> Self {
        let rel = (value - r.expected).abs() / r.expected.abs();
        CriterionResult {
            name: name.into(),
            value,
            limit: format!("{} within {}", r.expected, r.rel_tol),
            passed: rel <= r.rel_tol,
        }
    }
}

/// A finished run with its judged criteria.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub ambient: AmbientModel,
    pub initial_mesh: SurfaceMesh,
    pub outcome: RunOutcome,
    /// Configured probes followed by the automatic one, if any.
    pub probes: Vec<KernelProbe>,
    pub probe_rows: Vec<ProbeRow>,
    pub criteria: Vec<CriterionResult>,
    pub warnings: Vec<String>,
    pub exit: ExitCode,
}

fn stop_name(stop: &StopReason) -> StopName {
    match stop {
        StopReason::ReachedEnd => StopName::ReachedEnd,
        StopReason::Converged => StopName::Converged,
        StopReason::BlowUp(_) => StopName::BlowUp,
        StopReason::Stall => StopName::Stall,
    }
}

fn all_records(outcome: &RunOutcome) -> impl Iterator<Item = &DiagnosticsRecord> {
    std::iter::once(&outcome.initial).chain(&outcome.records)
}

fn largest_drop(series: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = series.collect();
    v.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
}

fn snapshot_mesh(s: &MeshSnapshot, like: &SurfaceMesh) -> Result<SurfaceMesh, CliError> {
    Ok(s.to_mesh_with(like.connectivity())?)
}

/// Density, windowed density and the localized companion integral of every
/// probe at every snapshot before its singular time.
pub fn probe_series(
    snapshots: &[MeshSnapshot],
    like: &SurfaceMesh,
    ambient: &AmbientModel,
    probes: &[KernelProbe],
    config: &RunConfig,
    flow: &FlowConfig,
) -> Result<Vec<ProbeRow>, CliError> {
    let mut rows = Vec::new();
    if probes.is_empty() {
        return Ok(rows);
    }
    let form = config.diagnostics.residual_form.into();
    for s in snapshots {
        if probes.iter().all(|p| s.t >= p.t0()) {
            continue;
        }
        let mesh = snapshot_mesh(s, like)?;
        let field = shape_field(&mesh, ambient, &flow.shape)?;
        for (k, p) in probes.iter().enumerate() {
            if s.t >= p.t0() {
                continue;
            }
            let d = density_of_mesh(&mesh, s.t, p, Quadrature::Auto)?;
            let loc = localized_sample(&mesh, &field, s.t, ambient, p, form)?;
            rows.push(ProbeRow {
                probe: k,
                t: s.t,
                density: d.density,
                windowed_density: d.windowed,
                companion_integral: loc.companion,
            });
        }
    }
    Ok(rows)
}

fn judge(config: &RunConfig, sim: &Simulation) -> Result<Vec<CriterionResult>, CliError> {
    let c = &config.criteria;
    let out = &sim.outcome;
    let last = out.records.last().unwrap_or(&out.initial);
    let (r1, r2) = sim.ambient.radii().unwrap_or((1.0, 1.0));
    let mut res = Vec::new();
    let estimate = match out.stop {
        StopReason::BlowUp(est) => Some(est),
        _ => None,
    };
    if let Some(r) = &c.singular_time {
        res.push(CriterionResult::relative("singular_time", estimate.map_or(f64::NAN, |e| e.t0), r));
    }
    if let Some(r) = &c.type_one_constant {
        res.push(CriterionResult::relative("type_one_constant", estimate.map_or(f64::NAN, |e| e.constant), r));
    }
    if let Some(limit) = c.huisken_max_violation {
        let probe = &sim.probes[0];
        let before: Vec<MeshSnapshot> = out.snapshots.iter().filter(|s| s.t < probe.t0()).cloned().collect();
        let report = huisken_monotonicity_check(&before, probe)?;
        res.push(CriterionResult::at_most("huisken_max_violation", report.max_violation, limit));
    }
    if let Some(limit) = c.min_eta1_drop {
        res.push(CriterionResult::at_most("min_eta1_drop", largest_drop(all_records(out).map(|r| r.min_eta1)), limit));
    }
    if let Some(limit) = c.min_eta2_drop {
        res.push(CriterionResult::at_most("min_eta2_drop", largest_drop(all_records(out).map(|r| r.min_eta2)), limit));
    }
    if let Some(limit) = c.min_mu_drop {
        let lowest = all_records(out).map(|r| r.min_mu).fold(f64::INFINITY, f64::min);
        res.push(CriterionResult::at_most("min_mu_drop", (out.initial.min_mu - lowest).max(0.0), limit));
    }
    if let Some(limit) = c.min_eta1_floor {
        let lowest = all_records(out).map(|r| r.min_eta1).fold(f64::INFINITY, f64::min);
        res.push(CriterionResult {
            passed: lowest > limit,
            ..CriterionResult::at_least("min_eta1_floor", lowest, limit)
        });
    }
    if let Some(limit) = c.final_max_h {
        res.push(CriterionResult::at_most("final_max_h", last.max_h, limit));
    }
    if let Some(limit) = c.final_max_a2 {
        res.push(CriterionResult::at_most("final_max_a2", last.max_a2, limit));
    }
    if let Some(limit) = c.final_min_eta1 {
        res.push(CriterionResult::at_least("final_min_eta1", last.min_eta1, limit));
    }
    if let Some(limit) = c.final_min_eta2 {
        res.push(CriterionResult::at_least("final_min_eta2", last.min_eta2, limit));
    }
    let final_positions = out.final_state.mesh.positions();
    if let Some(limit) = c.final_second_factor_spread {
        let n = final_positions.len() as f64;
        let mut mean = [0.0; 3];
        for p in final_positions {
            for (m, x) in mean.iter_mut().zip(p.factor(1)) {
                *m += x / n;
            }
        }
        let spread = final_positions
            .iter()
            .map(|p| {
                let q = p.factor(1);
                ((q[0] - mean[0]).powi(2) + (q[1] - mean[1]).powi(2) + (q[2] - mean[2]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        res.push(CriterionResult::at_most("final_second_factor_spread", spread / r2, limit));
    }
    if let Some(limit) = c.final_max_jacobian {
        let map = GraphMap::from_surface(&out.final_state.mesh, r1, r2)?;
        let worst = jacobians(&map)?.into_iter().fold(0.0, |m: f64, j| m.max(j.abs()));
        res.push(CriterionResult::at_most("final_max_jacobian", worst, limit));
    }
    if let Some(limit) = c.max_drift {
        let start = sim.initial_mesh.positions();
        let drift = out
            .snapshots
            .iter()
            .flat_map(|s| s.vertices.iter().zip(start).map(|(v, p)| (to_vec6(v) - *p).norm()))
            .chain(final_positions.iter().zip(start).map(|(v, p)| (*v - *p).norm()))
            .fold(0.0, f64::max);
        res.push(CriterionResult::at_most("max_drift", drift / r1, limit));
    }
    if let Some(limit) = c.eta1_unit_tolerance {
        let dev = all_records(out).map(|r| (r.min_eta1 - 1.0).abs().max((r.max_eta1 - 1.0).abs())).fold(0.0, f64::max);
        res.push(CriterionResult::at_most("eta1_unit_tolerance", dev, limit));
    }
    if let Some(limit) = c.max_eta_residual {
        let worst = out.records.iter().map(|r| r.eta_residual).filter(|x| x.is_finite()).fold(0.0, f64::max);
        res.push(CriterionResult::at_most("max_eta_residual", worst, limit));
    }
    for r in &mut res {
        if r.value.is_nan() {
            r.passed = false;
        }
    }
    Ok(res)
}

/// Runs a resolved configuration without touching the filesystem (beyond
/// reading an input mesh).
pub fn simulate(config: &RunConfig) -> Result<Simulation, CliError> {
    let prepared = prepare(config)?;
    simulate_prepared(config, prepared)
}

pub fn simulate_prepared(config: &RunConfig, prepared: Prepared) -> Result<Simulation, CliError> {
    let Prepared { ambient, mesh, flow, record } = prepared;
    let outcome = run_with(mesh.clone(), &ambient, &flow, &record)?;
    let mut warnings = Vec::new();
    if let Some(floor) = config.diagnostics.eta_floor {
        if let Some(r) = all_records(&outcome).find(|r| r.below_eta_floor) {
            warnings.push(format!("min η fell below {floor} at t = {}", r.t));
        }
    }
    let mut probes = record.probes.clone();
    if let (true, StopReason::BlowUp(est)) = (config.diagnostics.auto_probe, outcome.stop) {
        // the vertex of largest |A|² at the estimated singular time
        let state = &outcome.final_state;
        let worst =
            (0..state.shape.len()).fold(
                0,
                |w, v| {
                    if state.shape[v].norm_a_sq > state.shape[w].norm_a_sq {
                        v
                    } else {
                        w
                    }
                },
            );
        let center = state.mesh.position(worst);
        match KernelProbe::new(center, est.t0, None) {
            Ok(p) if est.t0.is_finite() => probes.push(p),
            _ => warnings.push("no finite singular time estimate for the automatic probe".into()),
        }
    }
    let probe_rows = probe_series(&outcome.snapshots, &mesh, &ambient, &probes, config, &flow)?;
    let mut sim = Simulation {
        ambient,
        initial_mesh: mesh,
        outcome,
        probes,
        probe_rows,
        criteria: Vec::new(),
        warnings,
        exit: ExitCode::Success,
    };
    sim.criteria = judge(config, &sim)?;
    let expected =
        config.criteria.expect_stop.clone().unwrap_or_else(|| vec![StopName::ReachedEnd, StopName::Converged]);
    let stop = stop_name(&sim.outcome.stop);
    sim.exit = if !expected.contains(&stop) {
        match stop {
            StopName::BlowUp => ExitCode::BlowUp,
            StopName::Stall => ExitCode::Numerical,
            _ => ExitCode::CriteriaFailed,
        }
    } else if sim.criteria.iter().all(|c| c.passed) {
        ExitCode::Success
    } else {
        ExitCode::CriteriaFailed
    };
    Ok(sim)
}

fn record_summary(r: &DiagnosticsRecord) -> Value {
    json!({
        "t": r.t,
        "area": r.area,
        "min_eta1": r.min_eta1,
        "min_eta2": r.min_eta2,
        "min_mu": r.min_mu,
        "max_A2": r.max_a2,
        "max_H": r.max_h,
    })
}

/// Files written by [`execute`].
pub const OUTPUT_FILES: [&str; 4] = ["run.csv", "probes.csv", "snapshots.jsonl", "manifest.json"];

pub fn manifest(config: &RunConfig, raw: &Value, sim: &Simulation) -> Value {
    let out = &sim.outcome;
    let singular = match out.stop {
        StopReason::BlowUp(est) => json!({ "t0": est.t0, "constant": est.constant }),
        _ => Value::Null,
    };
    json!({
        "versions": { "symflow": env!("CARGO_PKG_VERSION"), "symflow-core": symflow_core::VERSION },
        "seed": config.seed,
        "config": raw,
        "resolved_config": serde_json::to_value(config).expect("configs serialize"),
        "stop": out.stop.name(),
        "singular_time": singular,
        "steps": out.records.len(),
        "final_t": out.final_state.t,
        "initial": record_summary(&out.initial),
        "final": record_summary(out.records.last().unwrap_or(&out.initial)),
        "probes": sim.probes.iter().map(|p| json!({
            "center": p.center().0.to_vec(),
            "t0": p.t0(),
            "cutoff": p.cutoff(),
        })).collect::<Vec<_>>(),
        "criteria": sim.criteria,
        "warnings": sim.warnings,
        "exit_code": sim.exit as i32,
        "files": OUTPUT_FILES,
    })
}

/// Output directory, overridable through `SYMFLOW_OUT_DIR`.
pub fn output_dir(config: &RunConfig) -> PathBuf {
    std::env::var_os("SYMFLOW_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| config.output_dir.clone())
}

/// Simulates and writes every output file into `dir`.
pub fn execute(config: &RunConfig, raw: &Value, dir: &Path) -> Result<Simulation, CliError> {
    let sim = simulate(config)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    output::write_run_csv(&dir.join("run.csv"), &sim.outcome.records, config.diagnostics.probes.len())?;
    output::write_probe_csv(&dir.join("probes.csv"), &sim.probe_rows)?;
    output::write_snapshots(&dir.join("snapshots.jsonl"), &sim.outcome.snapshots)?;
    output::write_json(&dir.join("manifest.json"), &manifest(config, raw, &sim))?;
    Ok(sim)
}
