//! Run configuration: JSON schema, preset merging and validation.

use crate::presets;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;
use symflow_core::ambient::{AmbientModel, ParallelForm};
use symflow_core::diagnostics::LaplacianKind;
use symflow_core::flow::{FlowConfig, Integrator};
use symflow_core::surface::ShapeOptions;
use thiserror::Error;

/// A configuration problem, located by a dotted field path.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset whose settings the rest of the file overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub ambient: AmbientSpec,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub criteria: CriteriaSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Only mesh-perturbation presets draw from it; echoed in every output.
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("symflow-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AmbientSpec {
    Euclidean4,
    ProductSpheres { r1: f64, r2: f64 },
}

impl AmbientSpec {
    pub fn build(&self) -> Result<AmbientModel, SchemaError> {
        match *self {
            AmbientSpec::Euclidean4 => Ok(AmbientModel::euclidean4()),
            AmbientSpec::ProductSpheres { r1, r2 } => {
                for (name, r) in [("r1", r1), ("r2", r2)] {
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(SchemaError::new(
                            format!("ambient.{name}"),
                            format!("radius must be positive, got {r}"),
                        ));
                    }
                }
                AmbientModel::product_spheres(r1, r2).map_err(|e| SchemaError::new("ambient", e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// Round sphere in the `x₁x₂x₃` space of ℝ⁴.
    RoundSphere {
        level: u32,
        radius: f64,
        #[serde(default)]
        center: [f64; 4],
    },
    /// `S²(r₁) × {r₂ p}`.
    FactorSphere {
        level: u32,
        #[serde(default = "north")]
        point: [f64; 3],
    },
    /// Graph of the identity.
    Diagonal { level: u32 },
    /// Graph of `f(x) = exp_q(ε G(x))`, `q` the north pole, with
    /// `G(x) = (x₁, x₂, 0) + perturbation · (R x)` and `R` a seeded random
    /// 2×3 matrix with entries in `[-1, 1]`.
    ContractionMap {
        level: u32,
        epsilon: f64,
        #[serde(default)]
        perturbation: f64,
        /// Refuse maps whose largest initial `|Jac|` exceeds this.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_jacobian: Option<f64>,
    },
    /// `(a cos u, a sin u, b cos v, b sin v)` in ℝ⁴.
    ProductTorus { nu: usize, nv: usize, a: f64, b: f64 },
    /// First record of a snapshot file.
    Mesh { path: PathBuf },
}

fn north() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    Euler,
    Rk2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormName {
    Omega1,
    Omega2,
    OmegaPrime,
    OmegaDoublePrime,
}

impl From<FormName> for ParallelForm {
    fn from(f: FormName) -> Self {
        match f {
            FormName::Omega1 => ParallelForm::Omega1,
            FormName::Omega2 => ParallelForm::Omega2,
            FormName::OmegaPrime => ParallelForm::OmegaPrime,
            FormName::OmegaDoublePrime => ParallelForm::OmegaDoublePrime,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianName {
    Jet,
    Cotan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub cfl: f64,
    pub max_dt: f64,
    pub t_end: f64,
    pub converge_h: f64,
    pub converge_steps: usize,
    pub blowup_a2: f64,
    pub min_dt: f64,
    pub min_angle_deg: f64,
    pub integrator: IntegratorName,
    pub snapshot_every: usize,
    pub max_steps: usize,
    pub jet_degree: usize,
    pub tilt_iterations: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        let c = FlowConfig::default();
        FlowSpec {
            cfl: c.cfl,
            max_dt: c.max_dt,
            t_end: c.t_end,
            converge_h: c.converge_h,
            converge_steps: c.converge_steps,
            blowup_a2: c.blowup_a2,
            min_dt: c.min_dt,
            min_angle_deg: c.min_angle.to_degrees(),
            integrator: IntegratorName::Euler,
            snapshot_every: 10,
            max_steps: c.max_steps,
            jet_degree: c.shape.jet_degree,
            tilt_iterations: c.shape.tilt_iterations,
        }
    }
}

impl FlowSpec {
    pub fn build(&self) -> Result<FlowConfig, SchemaError> {
        let cfg = FlowConfig {
            cfl: self.cfl,
            max_dt: self.max_dt,
            t_end: self.t_end,
            converge_h: self.converge_h,
            converge_steps: self.converge_steps,
            blowup_a2: self.blowup_a2,
            min_dt: self.min_dt,
            min_angle: self.min_angle_deg.to_radians(),
            integrator: match self.integrator {
                IntegratorName::Euler => Integrator::Euler,
                IntegratorName::Rk2 => Integrator::Rk2,
            },
            snapshot_every: self.snapshot_every,
            max_steps: self.max_steps,
            shape: ShapeOptions { jet_degree: self.jet_degree, tilt_iterations: self.tilt_iterations },
        };
        let checks: [(&str, bool, &str); 8] = [
            ("flow.cfl", cfg.cfl > 0.0 && cfg.cfl < 1.0, "must lie in (0, 1)"),
            ("flow.max_dt", cfg.max_dt > 0.0, "must be positive"),
            ("flow.t_end", cfg.t_end >= 0.0 && cfg.t_end.is_finite(), "must be finite and non-negative"),
            ("flow.converge_h", cfg.converge_h > 0.0, "must be positive"),
            ("flow.converge_steps", cfg.converge_steps > 0, "must be at least 1"),
            ("flow.blowup_a2", cfg.blowup_a2 > 0.0, "must be positive"),
            ("flow.min_dt", cfg.min_dt > 0.0, "must be positive"),
            ("flow.jet_degree", (2..=4).contains(&cfg.shape.jet_degree), "must be 2, 3 or 4"),
        ];
        for (path, ok, msg) in checks {
            if !ok {
                return Err(SchemaError::new(path, msg));
            }
        }
        if !(self.min_angle_deg >= 0.0 && self.min_angle_deg < 60.0) {
            return Err(SchemaError::new("flow.min_angle_deg", "must lie in [0, 60)"));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// `N` coordinates (4 or 6).
    pub center: Vec<f64>,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub residual: bool,
    pub residual_form: FormName,
    pub laplacian: LaplacianName,
    pub probes: Vec<ProbeSpec>,
    /// After a blow-up, also probe at the vertex of largest `|A|²` and the
    /// estimated singular time.
    pub auto_probe: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_floor: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            residual: true,
            residual_form: FormName::OmegaPrime,
            laplacian: LaplacianName::Jet,
            probes: Vec::new(),
            auto_probe: false,
            eta_floor: None,
        }
    }
}

impl DiagnosticsSpec {
    pub fn laplacian_kind(&self) -> LaplacianKind {
        match self.laplacian {
            LaplacianName::Jet => LaplacianKind::Jet,
            LaplacianName::Cotan => LaplacianKind::Cotan,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopName {
    #[serde(rename = "reached-t_end")]
    ReachedEnd,
    Converged,
    BlowUp,
    Stall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relative {
    pub expected: f64,
    pub rel_tol: f64,
}

/// Pass criteria; each one present in the file is evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaSpec {
    /// Acceptable stop reasons; by default reaching `t_end` or converging.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_stop: Option<Vec<StopName>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular_time: Option<Relative>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_one_constant: Option<Relative>,
    /// Largest upward step of the Gaussian density at the first probe.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub huisken_max_violation: Option<f64>,
    /// Largest per-step drop of `min η′`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eta1_drop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eta2_drop: Option<f64>,
    /// Largest fall of `min μ` below its initial value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_mu_drop: Option<f64>,
    /// Every recorded `min η′` must stay above this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eta1_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_max_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_max_a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_min_eta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_min_eta2: Option<f64>,
    /// Largest distance of a second-factor point from their mean, over `r₂`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_second_factor_spread: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_max_jacobian: Option<f64>,
    /// Largest vertex displacement from the initial mesh, over `r₁`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_drift: Option<f64>,
    /// `|η′ − 1|` bound over every record.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta1_unit_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_eta_residual: Option<f64>,
}

/// Recursively overlays `top` on `base`; objects merge key by key, any other
/// value replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && !switches_variant(&k, slot, &v) => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// A tagged section whose tag changes is replaced, not merged.
fn switches_variant(key: &str, old: &Value, new: &Value) -> bool {
    let tag = match key {
        "ambient" => "kind",
        "surface" => "shape",
        _ => return false,
    };
    match (old.get(tag), new.get(tag)) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    }
}

/// Parses a configuration document, applying its preset first.
pub fn resolve(text: &str) -> Result<(RunConfig, Value), SchemaError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| SchemaError::new("$", e.to_string()))?;
    let Value::Object(ref top) = raw else {
        return Err(SchemaError::new("$", "configuration must be a JSON object"));
    };
    let mut merged = match top.get("preset") {
        None => Value::Object(Default::default()),
        Some(Value::String(name)) => {
            let preset = presets::preset(name).ok_or_else(|| {
                SchemaError::new("preset", format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
            })?;
            serde_json::to_value(preset).expect("presets serialize")
        }
        Some(_) => return Err(SchemaError::new("preset", "must be a string")),
    };
    merge(&mut merged, raw.clone());
    let config: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(
            if path.is_empty() || path == "." { "$".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    validate(&config)?;
    Ok((config, raw))
}

/// Checks that serde cannot express.
pub fn validate(config: &RunConfig) -> Result<(), SchemaError> {
    let ambient = config.ambient.build()?;
    config.flow.build()?;
    let dim = ambient.embedding_dim();
    match (&config.surface, &config.ambient) {
        (SurfaceSpec::RoundSphere { radius, .. }, AmbientSpec::Euclidean4) => {
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(SchemaError::new("surface.radius", "must be positive"));
            }
        }
        (SurfaceSpec::ProductTorus { nu, nv, a, b }, AmbientSpec::Euclidean4) => {
            if *nu < 3 || *nv < 3 {
                return Err(SchemaError::new("surface.nu", "torus grids need at least 3 cells per direction"));
            }
            if !(*a > 0.0 && *b > 0.0) {
                return Err(SchemaError::new("surface.a", "radii must be positive"));
            }
        }
        (SurfaceSpec::RoundSphere { .. } | SurfaceSpec::ProductTorus { .. }, _) => {
            return Err(SchemaError::new("surface.shape", "this surface lives in the euclidean4 ambient"));
        }
        (SurfaceSpec::FactorSphere { point, .. }, AmbientSpec::ProductSpheres { .. }) => {
            let n = point.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-10 {
                return Err(SchemaError::new("surface.point", "must be a unit vector"));
            }
        }
        (SurfaceSpec::ContractionMap { epsilon, perturbation, .. }, AmbientSpec::ProductSpheres { .. }) => {
            if !epsilon.is_finite() || !perturbation.is_finite() {
                return Err(SchemaError::new("surface.epsilon", "must be finite"));
            }
        }
        (SurfaceSpec::Diagonal { .. }, AmbientSpec::ProductSpheres { .. }) | (SurfaceSpec::Mesh { .. }, _) => {}
        (_, AmbientSpec::Euclidean4) => {
            return Err(SchemaError::new("surface.shape", "graph surfaces live in the product-spheres ambient"));
        }
    }
    if let SurfaceSpec::RoundSphere { level, .. }
    | SurfaceSpec::FactorSphere { level, .. }
    | SurfaceSpec::Diagonal { level }
    | SurfaceSpec::ContractionMap { level, .. } = &config.surface
    {
        if *level > 7 {
            return Err(SchemaError::new("surface.level", "subdivision levels above 7 are not supported"));
        }
    }
    for (i, p) in config.diagnostics.probes.iter().enumerate() {
        if p.center.len() != dim {
            return Err(SchemaError::new(
                format!("diagnostics.probes[{i}].center"),
                format!("expected {dim} coordinates, got {}", p.center.len()),
            ));
        }
        if !p.t0.is_finite() || p.center.iter().any(|x| !x.is_finite()) {
            return Err(SchemaError::new(format!("diagnostics.probes[{i}]"), "must be finite"));
        }
        if let Some(r) = p.cutoff {
            if !(r > 0.0) {
                return Err(SchemaError::new(format!("diagnostics.probes[{i}].cutoff"), "must be positive"));
            }
        }
    }
    if config.criteria.huisken_max_violation.is_some() {
        if dim != 4 {
            return Err(SchemaError::new("criteria.huisken_max_violation", "needs the euclidean4 ambient"));
        }
        if config.diagnostics.probes.is_empty() {
            return Err(SchemaError::new("criteria.huisken_max_violation", "needs at least one probe"));
        }
    }
    Ok(())
}
