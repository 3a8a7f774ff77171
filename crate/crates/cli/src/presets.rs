//! Named run configurations for the standard experiments.

use crate::config::*;
use std::path::PathBuf;

pub const NAMES: [&str; 7] = [
    "theoremA",
    "theoremB-mu",
    "theoremC-converge",
    "theoremD-graph",
    "corollaryD-map",
    "huisken-shrinker",
    "stationary-checks",
];

fn product(surface: SurfaceSpec, flow: FlowSpec, criteria: CriteriaSpec, name: &str) -> RunConfig {
    RunConfig {
        preset: None,
        ambient: AmbientSpec::ProductSpheres { r1: 1.0, r2: 1.0 },
        surface,
        flow,
        diagnostics: DiagnosticsSpec::default(),
        criteria,
        output_dir: PathBuf::from(format!("symflow-out/{name}")),
        seed: 0,
    }
}

fn contraction(level: u32, epsilon: f64, perturbation: f64) -> SurfaceSpec {
    SurfaceSpec::ContractionMap { level, epsilon, perturbation, max_jacobian: Some(1.0) }
}

fn settles(t_end: f64) -> FlowSpec {
    FlowSpec { t_end, snapshot_every: 50, ..FlowSpec::default() }
}

/// The default configuration stored under `name`.
pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        // min η′ never decreases for a map with |Jac| < 1
        "theoremA" => {
            let mut c = product(
                contraction(3, 0.5, 0.05),
                FlowSpec { t_end: 1.0, ..settles(1.0) },
                CriteriaSpec { min_eta1_drop: Some(1e-4), min_eta2_drop: Some(1e-4), ..CriteriaSpec::default() },
                name,
            );
            c.seed = 7;
            c
        }
        "theoremB-mu" => product(
            contraction(3, 0.5, 0.0),
            FlowSpec { t_end: 0.5, ..settles(0.5) },
            CriteriaSpec { min_mu_drop: Some(1e-4), ..CriteriaSpec::default() },
            name,
        ),
        "theoremC-converge" => product(
            contraction(3, 0.3, 0.0),
            settles(20.0),
            CriteriaSpec {
                expect_stop: Some(vec![StopName::Converged]),
                final_max_a2: Some(1e-2),
                final_min_eta1: Some(0.99),
                ..CriteriaSpec::default()
            },
            name,
        ),
        // the surface stays a graph: both η stay positive
        "theoremD-graph" => product(
            contraction(3, 0.5, 0.0),
            settles(20.0),
            CriteriaSpec {
                expect_stop: Some(vec![StopName::Converged]),
                min_eta1_floor: Some(0.0),
                final_min_eta1: Some(0.99),
                final_min_eta2: Some(0.99),
                ..CriteriaSpec::default()
            },
            name,
        ),
        // the map deforms into a constant
        "corollaryD-map" => {
            let mut c = product(
                SurfaceSpec::ContractionMap { level: 4, epsilon: 0.3, perturbation: 0.0, max_jacobian: Some(0.5) },
                settles(20.0),
                CriteriaSpec {
                    expect_stop: Some(vec![StopName::Converged]),
                    final_max_h: Some(1e-3),
                    final_max_a2: Some(1e-2),
                    min_eta1_drop: Some(1e-4),
                    final_second_factor_spread: Some(1e-2),
                    final_max_jacobian: Some(1e-3),
                    final_min_eta1: Some(0.999),
                    final_min_eta2: Some(0.999),
                    ..CriteriaSpec::default()
                },
                name,
            );
            c.diagnostics.residual = false;
            c
        }
        "huisken-shrinker" => RunConfig {
            preset: None,
            ambient: AmbientSpec::Euclidean4,
            surface: SurfaceSpec::RoundSphere { level: 4, radius: 1.0, center: [0.0; 4] },
            // stop once the radius falls below about 0.195
            flow: FlowSpec { t_end: 1.0, blowup_a2: 2.0 / (0.195 * 0.195), snapshot_every: 20, ..FlowSpec::default() },
            diagnostics: DiagnosticsSpec {
                residual: false,
                probes: vec![ProbeSpec { center: vec![0.0; 4], t0: 0.25, cutoff: None }],
                ..DiagnosticsSpec::default()
            },
            criteria: CriteriaSpec {
                expect_stop: Some(vec![StopName::BlowUp]),
                singular_time: Some(Relative { expected: 0.25, rel_tol: 0.02 }),
                type_one_constant: Some(Relative { expected: 0.5, rel_tol: 0.05 }),
                huisken_max_violation: Some(1e-3),
                ..CriteriaSpec::default()
            },
            output_dir: PathBuf::from(format!("symflow-out/{name}")),
            seed: 0,
        },
        // override `surface` with {"shape": "diagonal", "level": 2} for the
        // other totally geodesic sphere
        "stationary-checks" => {
            let mut c = product(
                SurfaceSpec::FactorSphere { level: 2, point: [0.0, 0.0, 1.0] },
                FlowSpec {
                    t_end: 1e9,
                    max_steps: 10_000,
                    converge_steps: usize::MAX,
                    snapshot_every: 1000,
                    ..FlowSpec::default()
                },
                CriteriaSpec {
                    expect_stop: Some(vec![StopName::Stall]),
                    max_drift: Some(1e-6),
                    eta1_unit_tolerance: Some(1e-8),
                    ..CriteriaSpec::default()
                },
                name,
            );
            c.diagnostics.residual = false;
            c
        }
        _ => return None,
    };
    Some(cfg)
}
