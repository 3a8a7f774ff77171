//! Acceptance gate: one PASS/FAIL line per criterion, all required to pass.
//! Runs without the libtest harness so the lines are always printed.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};
use symflow::config::{resolve, RunConfig};
use symflow::run::{simulate, Simulation};
use symflow::verify::{verify_forms, VerifyOptions, VerifyReport};
use symflow::ExitCode;
use symflow_core::ambient::{AmbientModel, ParallelForm};
use symflow_core::diagnostics::{eta_evolution_residual, gaussian_density, KernelProbe, LaplacianKind};
use symflow_core::flow::{step, FlowConfig, FlowState, StopReason};
use symflow_core::forms::{comass, eigen_pair};
use symflow_core::mesh::{round_sphere_r4, MeshSnapshot, SurfaceMesh};
use symflow_core::surface::{graph_immersion, pullback_eta, scalar_jet, shape_field, ShapeData, ShapeOptions};
use symflow_core::{TwoForm4, Vec6};

const FORMS_BATCH: usize = 1000;
const FORMS_SEED: u64 = 2026;
const COMASS_TOL: f64 = 1e-6;
const EIGEN_TOL: f64 = 1e-10;
const ADAPTED_TOL: f64 = 1e-9;
const FORMS_BUDGET: Duration = Duration::from_secs(10);

const SHRINK_LEVEL: u32 = 5;
const RADIUS_TOL: f64 = 0.01;
const RADIUS_FLOOR: f64 = 0.2;
const SINGULAR_TIME_TOL: f64 = 0.02;
const TYPE_ONE_TOL: f64 = 0.05;
const SHRINK_BUDGET: Duration = Duration::from_secs(300);

const HUISKEN_MAX_VIOLATION: f64 = 1e-3;
const HUISKEN_REFINEMENT_GAIN: f64 = 2.0;

const STATIONARY_STEPS: usize = 10_000;
const STATIONARY_DRIFT: f64 = 1e-6;
const STATIONARY_ETA_TOL: f64 = 1e-8;

const THEOREM_A_SLACK: f64 = 1e-4;

const COROLLARY_MAX_H: f64 = 1e-3;
const COROLLARY_MAX_A2: f64 = 1e-2;
const COROLLARY_MIN_ETA: f64 = 0.999;
const COROLLARY_SPREAD: f64 = 1e-2;
const COROLLARY_BUDGET: Duration = Duration::from_secs(900);

const RESIDUAL_MIN_ORDER: f64 = 1.5;

const INVARIANCE_TOL: f64 = 1e-10;
const GRADIENT_BOUND_SLACK: f64 = 1e-6;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Verdict { passed, detail }
    }
}

fn preset(json: &str) -> RunConfig {
    resolve(json).expect("preset configuration resolves").0
}

fn forms_report() -> (VerifyReport, Duration) {
    let start = Instant::now();
    let report = verify_forms(&VerifyOptions { seed: FORMS_SEED, batch: FORMS_BATCH, inject_sign_flip: false });
    (report, start.elapsed())
}

/// Largest singular value of the antisymmetric matrix, an independent route
/// to the comass.
fn singular_comass(form: &TwoForm4) -> f64 {
    let m = Matrix4::from_fn(|i, j| form.matrix()[i][j]);
    m.singular_values().max()
}

fn criterion_forms_oracle(report: &VerifyReport, elapsed: Duration) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(FORMS_SEED + 1);
    let mut svd_error: f64 = 0.0;
    for _ in 0..FORMS_BATCH {
        let form = TwoForm4::from_components(std::array::from_fn(|_| rng.random_range(-3.0..3.0)));
        svd_error = svd_error.max((comass(&form) - singular_comass(&form)).abs());
        let ep = eigen_pair(&form);
        svd_error = svd_error.max((ep.lambda1 - singular_comass(&form)).abs());
    }
    let own_failures =
        report.failures.iter().filter(|f| matches!(f.property, "comass_oracle" | "eigen_identities" | "hodge")).count();
    let passed = own_failures == 0
        && report.comass_error <= COMASS_TOL
        && report.eigen_error <= EIGEN_TOL
        && svd_error <= EIGEN_TOL
        && elapsed < FORMS_BUDGET;
    Verdict::new(
        passed,
        format!(
            "{} forms: comass vs Grassmannian oracle {:.1e}, eigen identities {:.1e}, vs SVD {:.1e}, {:.2?}",
            report.cases, report.comass_error, report.eigen_error, svd_error, elapsed
        ),
    )
}

fn criterion_adapted_basis(report: &VerifyReport, elapsed: Duration) -> Verdict {
    let own_failures = report
        .failures
        .iter()
        .filter(|f| matches!(f.property, "adapted_basis" | "adapted_basis_plane" | "sum_eigen_pair"))
        .count();
    let mutant = verify_forms(&VerifyOptions { seed: FORMS_SEED, batch: 20, inject_sign_flip: true });
    let passed = own_failures == 0 && report.adapted_error <= ADAPTED_TOL && !mutant.passed() && elapsed < FORMS_BUDGET;
    Verdict::new(
        passed,
        format!(
            "{} planes: max entry error {:.1e}, sign-flipped ω″ caught {} times, {:.2?}",
            report.cases,
            report.adapted_error,
            mutant.failures.len(),
            elapsed
        ),
    )
}

fn mean_radius(s: &MeshSnapshot) -> f64 {
    s.vertices.iter().map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt()).sum::<f64>() / s.vertices.len() as f64
}

fn shrink(level: u32) -> (Simulation, Duration) {
    let cfg = preset(&format!(r#"{{"preset": "huisken-shrinker", "surface": {{"level": {level}}}}}"#));
    let start = Instant::now();
    let sim = simulate(&cfg).expect("shrinking sphere runs");
    (sim, start.elapsed())
}

fn criterion_shrinking_sphere(sim: &Simulation, elapsed: Duration) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut smallest = f64::INFINITY;
    for s in &sim.outcome.snapshots {
        let exact = (1.0 - 4.0 * s.t).sqrt();
        if exact >= RADIUS_FLOOR {
            worst = worst.max((mean_radius(s) / exact - 1.0).abs());
        }
        smallest = smallest.min(mean_radius(s));
    }
    let StopReason::BlowUp(est) = sim.outcome.stop else {
        return Verdict::new(false, format!("no blow-up detected ({})", sim.outcome.stop.name()));
    };
    let t0_err = (est.t0 / 0.25 - 1.0).abs();
    let c_err = (est.constant / 0.5 - 1.0).abs();
    let passed = worst <= RADIUS_TOL
        && smallest <= RADIUS_FLOOR
        && t0_err <= SINGULAR_TIME_TOL
        && c_err <= TYPE_ONE_TOL
        && elapsed < SHRINK_BUDGET;
    Verdict::new(
        passed,
        format!(
            "level {SHRINK_LEVEL}: radius error {:.2}% down to r = {smallest:.3}, t0 = {:.5} ({:.2}%), C = {:.5} ({:.2}%), {:.1?}",
            100.0 * worst,
            est.t0,
            100.0 * t0_err,
            est.constant,
            100.0 * c_err,
            elapsed
        ),
    )
}

fn huisken_violation(sim: &Simulation) -> f64 {
    sim.criteria.iter().find(|c| c.name == "huisken_max_violation").map_or(f64::NAN, |c| c.value)
}

fn criterion_huisken(fine: &Simulation) -> Verdict {
    let (coarse, _) = shrink(SHRINK_LEVEL - 1);
    let (vc, vf) = (huisken_violation(&coarse), huisken_violation(fine));
    let gain = vc / vf;
    let passed = vf < HUISKEN_MAX_VIOLATION && gain >= HUISKEN_REFINEMENT_GAIN;
    Verdict::new(
        passed,
        format!(
            "max upward step {vf:.2e} at level {SHRINK_LEVEL}, {vc:.2e} at level {}: gain {gain:.1}",
            SHRINK_LEVEL - 1
        ),
    )
}

fn criterion_stationary() -> Verdict {
    let mut details = Vec::new();
    let mut passed = true;
    for surface in [r#"{"shape": "factor-sphere", "level": 2}"#, r#"{"shape": "diagonal", "level": 2}"#] {
        let cfg = preset(&format!(
            r#"{{"preset": "stationary-checks", "surface": {surface}, "flow": {{"max_steps": {STATIONARY_STEPS}}},
                "criteria": {{"max_drift": {STATIONARY_DRIFT}, "eta1_unit_tolerance": {STATIONARY_ETA_TOL}}}}}"#
        ));
        let sim = simulate(&cfg).expect("stationary run");
        let value = |name: &str| sim.criteria.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.value);
        passed &= sim.exit == ExitCode::Success && sim.outcome.records.len() == STATIONARY_STEPS;
        details.push(format!(
            "{}: {} steps, drift {:.1e}, |η′−1| {:.1e}",
            if surface.contains("factor") { "S²×{p}" } else { "diagonal" },
            sim.outcome.records.len(),
            value("max_drift"),
            value("eta1_unit_tolerance")
        ));
    }
    Verdict::new(passed, details.join("; "))
}

fn criterion_theorem_a() -> Verdict {
    let cfg = preset(r#"{"preset": "theoremA"}"#);
    let sim = simulate(&cfg).expect("theorem A run");
    let drop = sim.criteria.iter().find(|c| c.name == "min_eta1_drop").map_or(f64::NAN, |c| c.value);
    let initial = sim.outcome.initial.min_eta1;
    let last = sim.outcome.records.last().map_or(initial, |r| r.min_eta1);
    let passed = (0.5..0.7).contains(&initial) && drop <= THEOREM_A_SLACK && !sim.outcome.records.is_empty();
    Verdict::new(
        passed,
        format!(
            "min η′ {initial:.4} → {last:.4} over {} steps, largest per-step drop {drop:.1e}",
            sim.outcome.records.len()
        ),
    )
}

fn criterion_corollary() -> Verdict {
    let cfg = preset(r#"{"preset": "corollaryD-map"}"#);
    let start = Instant::now();
    let sim = simulate(&cfg).expect("corollary run");
    let elapsed = start.elapsed();
    let last = sim.outcome.records.last().unwrap_or(&sim.outcome.initial);
    let value = |name: &str| sim.criteria.iter().find(|c| c.name == name).map_or(f64::NAN, |c| c.value);
    let spread = value("final_second_factor_spread");
    let passed = sim.outcome.stop == StopReason::Converged
        && last.max_h < COROLLARY_MAX_H
        && last.max_a2 < COROLLARY_MAX_A2
        && last.min_eta1 > COROLLARY_MIN_ETA
        && last.min_eta2 > COROLLARY_MIN_ETA
        && spread < COROLLARY_SPREAD
        && elapsed < COROLLARY_BUDGET;
    Verdict::new(
        passed,
        format!(
            "{} at t = {:.3}: max|H| {:.1e}, max|A|² {:.1e}, min η′ {:.6}, min η″ {:.6}, spread {spread:.1e}, {:.1?}",
            sim.outcome.stop.name(),
            last.t,
            last.max_h,
            last.max_a2,
            last.min_eta1,
            last.min_eta2,
            elapsed
        ),
    )
}

fn one_step_residual(mesh: SurfaceMesh, ambient: &AmbientModel) -> f64 {
    let cfg = FlowConfig::default();
    let s0 = FlowState::new(mesh, ambient, 0.0, &cfg.shape).expect("initial state");
    let s1 = step(&s0, ambient, &cfg).expect("one step");
    eta_evolution_residual(&s0, &s1, ambient, ParallelForm::OmegaPrime, LaplacianKind::Jet, &cfg.shape)
        .expect("residual")
}

fn graph_mesh(level: u32) -> SurfaceMesh {
    let map = symflow::run::contraction_map(level, 0.3, 0.0, 0, (1.0, 1.0)).expect("contraction map");
    graph_immersion(&map)
}

fn criterion_residual_orders() -> Verdict {
    let flat = AmbientModel::euclidean4();
    let product = AmbientModel::product_spheres(1.0, 1.0).expect("unit product");
    let sphere: Vec<f64> = (3..=5).map(|l| one_step_residual(round_sphere_r4(l, 1.0, &Vec6::ZERO), &flat)).collect();
    let graph: Vec<f64> = (3..=5).map(|l| one_step_residual(graph_mesh(l), &product)).collect();
    let orders = |r: &[f64]| -> Vec<f64> { r.windows(2).map(|w| (w[0] / w[1]).log2()).collect() };
    let (os, og) = (orders(&sphere), orders(&graph));
    let passed = os.iter().chain(&og).all(|&o| o >= RESIDUAL_MIN_ORDER);
    Verdict::new(
        passed,
        format!(
            "sphere {:.1e}/{:.1e}/{:.1e} orders {:.2}, {:.2}; graph {:.1e}/{:.1e}/{:.1e} orders {:.2}, {:.2}",
            sphere[0], sphere[1], sphere[2], os[0], os[1], graph[0], graph[1], graph[2], og[0], og[1]
        ),
    )
}

fn density_dilation_error() -> f64 {
    let y0 = Vec6::new([0.1, -0.2, 0.3, 0.05, 0.0, 0.0]);
    let t0 = 0.3;
    let probe = KernelProbe::new(y0, t0, Some(1.5)).expect("probe");
    let base: Vec<MeshSnapshot> = [0.0f64, 0.1, 0.2]
        .iter()
        .map(|&t| MeshSnapshot::from_mesh(t, 4, &round_sphere_r4(3, (1.0 - 4.0 * t).sqrt(), &Vec6::ZERO)))
        .collect();
    let reference = gaussian_density(&base, &probe).expect("density");
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 3.0, 17.0] {
        let scaled = KernelProbe::new(y0, t0, Some(1.5 * lambda)).expect("probe");
        let dilated: Vec<MeshSnapshot> = base
            .iter()
            .map(|s| MeshSnapshot {
                t: t0 + lambda * lambda * (s.t - t0),
                vertices: s
                    .vertices
                    .iter()
                    .map(|v| v.iter().enumerate().map(|(k, x)| y0[k] + lambda * (x - y0[k])).collect())
                    .collect(),
                ..s.clone()
            })
            .collect();
        for (a, b) in reference.iter().zip(gaussian_density(&dilated, &scaled).expect("density")) {
            worst = worst.max((a.density - b.density).abs() / a.density);
            worst = worst.max((a.windowed - b.windowed).abs() / a.density);
        }
    }
    worst
}

fn eta_dilation_error() -> f64 {
    let flat = AmbientModel::euclidean4();
    let base = round_sphere_r4(3, 1.0, &Vec6::new([0.1, 0.0, 0.0, 0.2, 0.0, 0.0]));
    let tilted =
        base.positions().iter().map(|p| Vec6::new([p[0], p[1] + 0.2 * p[2], p[2], p[3] + 0.3 * p[0] * p[1], 0.0, 0.0]));
    let mesh = base.with_positions(tilted.collect()).expect("same connectivity");
    let opts = ShapeOptions::default();
    let reference = shape_field(&mesh, &flat, &opts).expect("shape");
    let mut worst: f64 = 0.0;
    for lambda in [0.25, 4.0] {
        let scaled = mesh.with_positions(mesh.positions().iter().map(|p| p.scale(lambda)).collect()).expect("scaled");
        for (a, b) in reference.iter().zip(shape_field(&scaled, &flat, &opts).expect("shape")) {
            worst = worst.max((a.eta_prime - b.eta_prime).abs()).max((a.eta_double_prime - b.eta_double_prime).abs());
        }
    }
    worst
}

fn squared_norm(d: &ShapeData) -> f64 {
    let mut s = 0.0;
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                s += d.h[a][i][j] * d.h[a][i][j];
            }
        }
    }
    s
}

fn gauge_error() -> f64 {
    let product = AmbientModel::product_spheres(1.0, 1.0).expect("unit product");
    let map = symflow::run::contraction_map(3, 0.5, 0.3, 21, (1.0, 1.0)).expect("map");
    let field = shape_field(&graph_immersion(&map), &product, &ShapeOptions::default()).expect("shape");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let d = field[rng.random_range(0..field.len())];
        let r = d.rotated(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        worst = worst
            .max((squared_norm(&r) - d.norm_a_sq).abs())
            .max((pullback_eta(&r, &product, ParallelForm::OmegaPrime) - d.eta_prime).abs())
            .max((pullback_eta(&r, &product, ParallelForm::OmegaDoublePrime) - d.eta_double_prime).abs())
            .max((r.bracket() - d.bracket()).abs())
            .max((r.with_swapped_normals().bracket() - d.with_swapped_normals().bracket()).abs());
    }
    worst
}

/// Largest excess of `|∇η|²` over `2(1 − η²)Σₖ(h₄₁ₖ² + h₃₂ₖ²)`.
fn gradient_bound_excess() -> f64 {
    let product = AmbientModel::product_spheres(1.0, 1.0).expect("unit product");
    let opts = ShapeOptions::default();
    let mesh = graph_mesh(4);
    let field = shape_field(&mesh, &product, &opts).expect("shape");
    let mut worst = f64::NEG_INFINITY;
    for form in [ParallelForm::OmegaPrime, ParallelForm::OmegaDoublePrime] {
        let eta: Vec<f64> = field.iter().map(|d| d.eta(form, &product)).collect();
        for (v, d) in field.iter().enumerate() {
            let g = scalar_jet(&mesh, v, d, &eta, &opts).expect("jet").gradient;
            let a = d.adapted_to(&product, form);
            let e = a.eta(form, &product);
            let s: f64 = (0..2).map(|k| a.h[1][0][k].powi(2) + a.h[0][1][k].powi(2)).sum();
            worst = worst.max(g[0] * g[0] + g[1] * g[1] - 2.0 * (1.0 - e * e) * s);
        }
    }
    worst
}

fn criterion_invariance() -> Verdict {
    let density = density_dilation_error();
    let eta = eta_dilation_error();
    let gauge = gauge_error();
    let excess = gradient_bound_excess();
    let passed =
        density <= INVARIANCE_TOL && eta <= INVARIANCE_TOL && gauge <= INVARIANCE_TOL && excess <= GRADIENT_BOUND_SLACK;
    Verdict::new(
        passed,
        format!("dilation: density {density:.1e}, η {eta:.1e}; gauge {gauge:.1e}; ∇η bound excess {excess:.1e}"),
    )
}

fn main() {
    let mut verdicts: Vec<(&str, Verdict)> = Vec::new();
    let (forms, forms_time) = forms_report();
    verdicts.push(("forms oracle equivalence", criterion_forms_oracle(&forms, forms_time)));
    verdicts.push(("adapted basis construction", criterion_adapted_basis(&forms, forms_time)));
    let (fine, fine_time) = shrink(SHRINK_LEVEL);
    verdicts.push(("shrinking sphere benchmark", criterion_shrinking_sphere(&fine, fine_time)));
    verdicts.push(("Huisken monotonicity", criterion_huisken(&fine)));
    drop(fine);
    verdicts.push(("stationary surfaces", criterion_stationary()));
    verdicts.push(("min η′ monotone on a symplectic graph", criterion_theorem_a()));
    verdicts.push(("map deforms to a constant", criterion_corollary()));
    verdicts.push(("η evolution residual order", criterion_residual_orders()));
    verdicts.push(("invariance suite", criterion_invariance()));
    for (i, (name, v)) in verdicts.iter().enumerate() {
        println!("criterion {} {} {name}: {}", i + 1, if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed: Vec<usize> = verdicts.iter().enumerate().filter(|(_, (_, v))| !v.passed).map(|(i, _)| i + 1).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
