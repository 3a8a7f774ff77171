//! Observables along a flow: Gaussian densities against the backward heat
//! kernel, the η evolution residual, the localized monotone quantity,
//! monotonicity of `min η`, and an integrated check on the evolution of `|A|²`.

use crate::ambient::{AmbientModel, ParallelForm};
use crate::flow::FlowState;
use crate::math::{exp, sqrt, KahanSum, Vec6};
use crate::mesh::{MeshSnapshot, SurfaceMesh};
use crate::surface::{scalar_jet, ShapeData, ShapeOptions, SurfaceError};
use alloc::vec::Vec;
use core::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("snapshot at t = {t} is not before the probe singular time {t0}")]
    AfterSingularTime { t: f64, t0: f64 },
    #[error("probe cutoff radius must be positive, got {0}")]
    InvalidCutoff(f64),
    #[error("probe centre or time is not finite")]
    NonFiniteProbe,
    #[error("states do not share connectivity")]
    ConnectivityMismatch,
    #[error("states must be strictly ordered in time")]
    TimeOrder,
    #[error("the monotonicity of min η needs an Einstein ambient with c ≥ 0")]
    HypothesisViolated,
    #[error("monotonicity of the Gaussian density is only checked in flat ℝ⁴ (dim {0})")]
    NotEuclidean(usize),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// A backward heat kernel `ρ_{y₀,t₀}` for surfaces (`n = 2`), with an optional
/// cutoff `ψ` equal to one on the ball of radius `r/2` and zero outside `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelProbe {
    center: Vec6,
    t0: f64,
    cutoff: Option<f64>,
}

impl KernelProbe {
    pub fn new(center: Vec6, t0: f64, cutoff: Option<f64>) -> Result<Self, DiagnosticsError> {
        if !center.is_finite() || !t0.is_finite() {
            return Err(DiagnosticsError::NonFiniteProbe);
        }
        if let Some(r) = cutoff {
            if !(r > 0.0 && r.is_finite()) {
                return Err(DiagnosticsError::InvalidCutoff(r));
            }
        }
        Ok(KernelProbe { center, t0, cutoff })
    }

    pub fn center(&self) -> Vec6 {
        self.center
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    /// `(4π(t₀−t))⁻¹ exp(−|y−y₀|² / 4(t₀−t))`.
    pub fn rho(&self, y: &Vec6, t: f64) -> f64 {
        let tau = self.t0 - t;
        exp(-(*y - self.center).norm_sq() / (4.0 * tau)) / (4.0 * PI * tau)
    }

    /// Cutoff weight; identically one without a cutoff radius.
    pub fn psi(&self, y: &Vec6) -> f64 {
        match self.cutoff {
            None => 1.0,
            Some(r) => {
                let d = (*y - self.center).norm();
                if d <= 0.5 * r {
                    1.0
                } else if d >= r {
                    0.0
                } else {
                    let s = (d - 0.5 * r) / (0.5 * r);
                    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
                }
            }
        }
    }
}

/// Triangle quadrature for kernel integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrature {
    /// Centroid rule, upgraded to the edge-midpoint rule once `t₀ − t` drops
    /// below the squared mean edge length.
    Auto,
    Centroid,
    EdgeMidpoint,
}

/// One density sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensitySample {
    pub t: f64,
    pub density: f64,
    /// `∫ψρ dμ`; equals `density` when the probe has no cutoff.
    pub windowed: f64,
}

fn mean_edge(vertices: &[Vec6], triangles: &[[usize; 3]]) -> f64 {
    let mut s = KahanSum::default();
    let mut n = 0usize;
    for tri in triangles {
        for k in 0..3 {
            s.add((vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        s.value() / n as f64
    }
}

/// `∫ g·ρ dμ` over a triangle soup, with `g` linearly interpolated from
/// vertex values (or `1` when `weights` is `None`).
fn kernel_integral(
    vertices: &[Vec6],
    triangles: &[[usize; 3]],
    t: f64,
    probe: &KernelProbe,
    weights: Option<&[f64]>,
    rule: Quadrature,
) -> (f64, f64) {
    let rule = match rule {
        Quadrature::Auto => {
            let h = mean_edge(vertices, triangles);
            if probe.t0 - t < h * h {
                Quadrature::EdgeMidpoint
            } else {
                Quadrature::Centroid
            }
        }
        r => r,
    };
    let mut plain = KahanSum::default();
    let mut windowed = KahanSum::default();
    for tri in triangles {
        let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        let g = match weights {
            Some(w) => [w[tri[0]], w[tri[1]], w[tri[2]]],
            None => [1.0; 3],
        };
        let area = crate::mesh::triangle_area_from_edges(&(p[1] - p[0]), &(p[2] - p[0]));
        match rule {
            Quadrature::Centroid | Quadrature::Auto => {
                let c = (p[0] + p[1] + p[2]).scale(1.0 / 3.0);
                let gc = (g[0] + g[1] + g[2]) / 3.0;
                let r = probe.rho(&c, t) * gc * area;
                plain.add(r);
                windowed.add(r * probe.psi(&c));
            }
            Quadrature::EdgeMidpoint => {
                for k in 0..3 {
                    let m = (p[k] + p[(k + 1) % 3]).scale(0.5);
                    let gm = 0.5 * (g[k] + g[(k + 1) % 3]);
                    let r = probe.rho(&m, t) * gm * area / 3.0;
                    plain.add(r);
                    windowed.add(r * probe.psi(&m));
                }
            }
        }
    }
    (plain.value(), windowed.value())
}

fn snapshot_vertices(s: &MeshSnapshot) -> Vec<Vec6> {
    s.vertices.iter().map(|v| Vec6::from_slice(v)).collect()
}

/// `∫ρ dμ` (and `∫ψρ dμ`) at one mesh state.
pub fn density_of_mesh(
    mesh: &SurfaceMesh,
    t: f64,
    probe: &KernelProbe,
    rule: Quadrature,
) -> Result<DensitySample, DiagnosticsError> {
    if !(t < probe.t0) {
        return Err(DiagnosticsError::AfterSingularTime { t, t0: probe.t0 });
    }
    let (density, windowed) = kernel_integral(mesh.positions(), mesh.triangles(), t, probe, None, rule);
    Ok(DensitySample { t, density, windowed })
}

/// Gaussian density series over snapshots.
pub fn gaussian_density(
    snapshots: &[MeshSnapshot],
    probe: &KernelProbe,
) -> Result<Vec<DensitySample>, DiagnosticsError> {
    gaussian_density_with(snapshots, probe, Quadrature::Auto)
}

pub fn gaussian_density_with(
    snapshots: &[MeshSnapshot],
    probe: &KernelProbe,
    rule: Quadrature,
) -> Result<Vec<DensitySample>, DiagnosticsError> {
    snapshots
        .iter()
        .map(|s| {
            if !(s.t < probe.t0) {
                return Err(DiagnosticsError::AfterSingularTime { t: s.t, t0: probe.t0 });
            }
            let v = snapshot_vertices(s);
            let (density, windowed) = kernel_integral(&v, &s.triangles, s.t, probe, None, rule);
            Ok(DensitySample { t: s.t, density, windowed })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub series: Vec<DensitySample>,
    /// Largest increase of the density between consecutive snapshots
    /// (zero when the series never increases).
    pub max_violation: f64,
}

/// Density series and its largest upward step; Huisken's formula makes the
/// exact series non-increasing in flat space.
pub fn huisken_monotonicity_check(
    snapshots: &[MeshSnapshot],
    probe: &KernelProbe,
) -> Result<MonotonicityReport, DiagnosticsError> {
    if let Some(s) = snapshots.iter().find(|s| s.dim != 4) {
        return Err(DiagnosticsError::NotEuclidean(s.dim));
    }
    let series = gaussian_density(snapshots, probe)?;
    let max_violation = series.windows(2).map(|w| (w[1].density - w[0].density).max(0.0)).fold(0.0, f64::max);
    Ok(MonotonicityReport { series, max_violation })
}

/// Laplace–Beltrami discretization for the η residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LaplacianKind {
    /// Cotangent weights over mixed Voronoi areas.
    Cotan,
    /// Trace of the Hessian of the per-vertex scalar jet.
    Jet,
}

fn laplacian(
    mesh: &SurfaceMesh,
    field: &[ShapeData],
    values: &[f64],
    kind: LaplacianKind,
    opts: &ShapeOptions,
) -> Result<Vec<f64>, DiagnosticsError> {
    match kind {
        LaplacianKind::Cotan => Ok(mesh.cotan_laplacian(values)),
        LaplacianKind::Jet => {
            field.iter().enumerate().map(|(v, d)| Ok(scalar_jet(mesh, v, d, values, opts)?.laplacian())).collect()
        }
    }
}

/// Right-hand side `Δη + η·B + (1 − η²) Ric(J e₁, e₂)` of the η evolution
/// equation at every vertex, with `B` the bracket in the frame positive for
/// `form²`.
pub fn eta_rhs(
    mesh: &SurfaceMesh,
    field: &[ShapeData],
    ambient: &AmbientModel,
    form: ParallelForm,
    kind: LaplacianKind,
    opts: &ShapeOptions,
) -> Result<Vec<f64>, DiagnosticsError> {
    let eta: Vec<f64> = field.iter().map(|d| d.eta(form, ambient)).collect();
    let lap = laplacian(mesh, field, &eta, kind, opts)?;
    let mut out = Vec::with_capacity(field.len());
    for (v, d) in field.iter().enumerate() {
        let oriented = if form == ParallelForm::OmegaDoublePrime { d.with_swapped_normals() } else { *d };
        let je1 = ambient.complex_structure(&d.position, form, &d.frame[0]);
        let je1 = ambient.tangent_projection(&d.position, &je1);
        let ric = ambient.ricci(&d.position, &je1, &d.frame[1]).map_err(SurfaceError::from)?;
        out.push(lap[v] + eta[v] * oriented.bracket() + (1.0 - eta[v] * eta[v]) * ric);
    }
    Ok(out)
}

/// Area-weighted L² norm over vertices of
/// `(η(t₁) − η(t₀))/(t₁ − t₀) − ½(RHS(t₀) + RHS(t₁))`.
pub fn eta_evolution_residual(
    before: &FlowState,
    after: &FlowState,
    ambient: &AmbientModel,
    form: ParallelForm,
    kind: LaplacianKind,
    opts: &ShapeOptions,
) -> Result<f64, DiagnosticsError> {
    let per_vertex = eta_evolution_residual_field(before, after, ambient, form, kind, opts)?;
    Ok(area_weighted_norm(&after.mesh, &per_vertex))
}

fn area_weighted_norm(mesh: &SurfaceMesh, per_vertex: &[f64]) -> f64 {
    let areas = mesh.vertex_areas();
    let mut s = KahanSum::default();
    for (r, a) in per_vertex.iter().zip(&areas) {
        s.add(r * r * a);
    }
    sqrt(s.value())
}

/// Per-vertex residual behind [`eta_evolution_residual`].
pub fn eta_evolution_residual_field(
    before: &FlowState,
    after: &FlowState,
    ambient: &AmbientModel,
    form: ParallelForm,
    kind: LaplacianKind,
    opts: &ShapeOptions,
) -> Result<Vec<f64>, DiagnosticsError> {
    let r0 = eta_rhs(&before.mesh, &before.shape, ambient, form, kind, opts)?;
    let r1 = eta_rhs(&after.mesh, &after.shape, ambient, form, kind, opts)?;
    residual_from_rhs(before, after, ambient, form, &r0, &r1)
}

fn residual_from_rhs(
    before: &FlowState,
    after: &FlowState,
    ambient: &AmbientModel,
    form: ParallelForm,
    r0: &[f64],
    r1: &[f64],
) -> Result<Vec<f64>, DiagnosticsError> {
    if !before.mesh.same_connectivity(&after.mesh) {
        return Err(DiagnosticsError::ConnectivityMismatch);
    }
    let dt = after.t - before.t;
    if !(dt > 0.0) {
        return Err(DiagnosticsError::TimeOrder);
    }
    Ok(before
        .shape
        .iter()
        .zip(&after.shape)
        .enumerate()
        .map(|(v, (a, b))| (b.eta(form, ambient) - a.eta(form, ambient)) / dt - 0.5 * (r0[v] + r1[v]))
        .collect())
}

/// `∫ψ(1−η)ρ dμ` and the companion `∫ψρ·B dμ` at one state, plus `∫ψρ|H|² dμ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizedSample {
    pub t: f64,
    pub value: f64,
    pub companion: f64,
    pub mean_curvature_integral: f64,
}

pub fn localized_sample(
    mesh: &SurfaceMesh,
    field: &[ShapeData],
    t: f64,
    ambient: &AmbientModel,
    probe: &KernelProbe,
    form: ParallelForm,
) -> Result<LocalizedSample, DiagnosticsError> {
    if !(t < probe.t0) {
        return Err(DiagnosticsError::AfterSingularTime { t, t0: probe.t0 });
    }
    let one_minus: Vec<f64> = field.iter().map(|d| 1.0 - d.eta(form, ambient)).collect();
    let bracket: Vec<f64> = field
        .iter()
        .map(|d| if form == ParallelForm::OmegaDoublePrime { d.with_swapped_normals().bracket() } else { d.bracket() })
        .collect();
    let h2: Vec<f64> = field.iter().map(|d| d.mean_curvature.norm_sq()).collect();
    let pos = mesh.positions();
    let tris = mesh.triangles();
    let rule = Quadrature::Centroid;
    let (_, value) = kernel_integral(pos, tris, t, probe, Some(&one_minus), rule);
    let (_, companion) = kernel_integral(pos, tris, t, probe, Some(&bracket), rule);
    let (_, hint) = kernel_integral(pos, tris, t, probe, Some(&h2), rule);
    Ok(LocalizedSample { t, value, companion, mean_curvature_integral: hint })
}

/// Series of [`localized_sample`] over flow states.
pub fn localized_monotone_quantity(
    states: &[FlowState],
    ambient: &AmbientModel,
    probe: &KernelProbe,
    form: ParallelForm,
) -> Result<Vec<LocalizedSample>, DiagnosticsError> {
    states.iter().map(|s| localized_sample(&s.mesh, &s.shape, s.t, ambient, probe, form)).collect()
}

/// Largest excess of `d(series)/dt` over `allowed_rate`, times the step.
pub fn localized_violation(series: &[LocalizedSample], allowed_rate: f64) -> f64 {
    series.windows(2).map(|w| (w[1].value - w[0].value - allowed_rate * (w[1].t - w[0].t)).max(0.0)).fold(0.0, f64::max)
}

/// Largest drops of `min η′` and `min η″` between consecutive records.
#[derive(Clone, Debug, PartialEq)]
pub struct MinEtaReport {
    pub min_eta1: Vec<f64>,
    pub min_eta2: Vec<f64>,
    pub max_drop_eta1: f64,
    pub max_drop_eta2: f64,
}

pub fn min_eta_monotonicity(
    records: &[DiagnosticsRecord],
    ambient: &AmbientModel,
) -> Result<MinEtaReport, DiagnosticsError> {
    let c = ambient.einstein_constant().ok_or(DiagnosticsError::HypothesisViolated)?;
    min_eta_monotonicity_for_constant(records, c)
}

/// As [`min_eta_monotonicity`] for an Einstein constant given directly.
pub fn min_eta_monotonicity_for_constant(
    records: &[DiagnosticsRecord],
    c: f64,
) -> Result<MinEtaReport, DiagnosticsError> {
    if !(c >= 0.0) {
        return Err(DiagnosticsError::HypothesisViolated);
    }
    let min_eta1: Vec<f64> = records.iter().map(|r| r.min_eta1).collect();
    let min_eta2: Vec<f64> = records.iter().map(|r| r.min_eta2).collect();
    let drop = |s: &[f64]| s.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    Ok(MinEtaReport { max_drop_eta1: drop(&min_eta1), max_drop_eta2: drop(&min_eta2), min_eta1, min_eta2 })
}

/// Integrated check of `d/dt|A|² ≤ Δ|A|² − 2|∇A|² + 4|A|⁴ + K₁|A|² + K₂`
/// over one step, dropping the divergence and the non-positive gradient term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SffResidual {
    /// `∫ (|A|²(t₁) − |A|²(t₀))/(t₁ − t₀) dμ`.
    pub lhs: f64,
    /// `∫ 4|A|⁴ + K₁|A|² + K₂ dμ`, averaged over both ends.
    pub rhs: f64,
    /// `max(0, lhs − rhs) / max(|rhs|, 1)`.
    pub violation: f64,
}

pub fn sff_evolution_residual(
    before: &FlowState,
    after: &FlowState,
    k1: f64,
    k2: f64,
) -> Result<SffResidual, DiagnosticsError> {
    if !before.mesh.same_connectivity(&after.mesh) {
        return Err(DiagnosticsError::ConnectivityMismatch);
    }
    let dt = after.t - before.t;
    if !(dt > 0.0) {
        return Err(DiagnosticsError::TimeOrder);
    }
    let a0 = before.mesh.vertex_areas();
    let a1 = after.mesh.vertex_areas();
    let mut lhs = KahanSum::default();
    let mut rhs = KahanSum::default();
    for v in 0..a0.len() {
        let (s0, s1) = (before.shape[v].norm_a_sq, after.shape[v].norm_a_sq);
        let w = 0.5 * (a0[v] + a1[v]);
        lhs.add((s1 - s0) / dt * w);
        let f = |s: f64| 4.0 * s * s + k1 * s + k2;
        rhs.add(0.5 * (f(s0) * a0[v] + f(s1) * a1[v]));
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(SffResidual { lhs, rhs, violation: (lhs - rhs).max(0.0) / rhs.abs().max(1.0) })
}

/// What [`DiagnosticsRecord::build`] computes beyond the cheap aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordOptions {
    pub probes: Vec<KernelProbe>,
    /// Form whose η evolution residual is recorded.
    pub residual_form: ParallelForm,
    pub laplacian: LaplacianKind,
    pub compute_residual: bool,
    /// Warn when `min η′` or `min η″` drops below this.
    pub eta_floor: Option<f64>,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions {
            probes: Vec::new(),
            residual_form: ParallelForm::OmegaPrime,
            laplacian: LaplacianKind::Jet,
            compute_residual: true,
            eta_floor: None,
        }
    }
}

/// Scalars describing one flow state.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    /// Length of the step that produced this state (zero initially).
    pub dt: f64,
    pub area: f64,
    pub min_eta1: f64,
    pub max_eta1: f64,
    pub min_eta2: f64,
    pub max_eta2: f64,
    pub min_mu: f64,
    pub max_a2: f64,
    pub max_h: f64,
    /// `NaN` when no previous state is available.
    pub eta_residual: f64,
    /// One per probe; `NaN` once `t ≥ t₀`.
    pub densities: Vec<f64>,
    pub windowed_densities: Vec<f64>,
    pub below_eta_floor: bool,
}

impl DiagnosticsRecord {
    pub fn build(
        before: Option<&FlowState>,
        state: &FlowState,
        ambient: &AmbientModel,
        opts: &RecordOptions,
        shape: &ShapeOptions,
    ) -> Result<Self, DiagnosticsError> {
        Self::build_cached(before, state, ambient, opts, shape, &mut None)
    }

    /// [`build`](Self::build) reusing the η right-hand side of `before` from
    /// `cache`, which is left holding the right-hand side of `state`.
    pub fn build_cached(
        before: Option<&FlowState>,
        state: &FlowState,
        ambient: &AmbientModel,
        opts: &RecordOptions,
        shape: &ShapeOptions,
        cache: &mut Option<Vec<f64>>,
    ) -> Result<Self, DiagnosticsError> {
        let mut r = DiagnosticsRecord {
            step: state.step,
            t: state.t,
            dt: before.map_or(0.0, |b| state.t - b.t),
            area: state.mesh.area(),
            min_eta1: f64::INFINITY,
            max_eta1: f64::NEG_INFINITY,
            min_eta2: f64::INFINITY,
            max_eta2: f64::NEG_INFINITY,
            min_mu: f64::INFINITY,
            max_a2: 0.0,
            max_h: 0.0,
            eta_residual: f64::NAN,
            densities: Vec::with_capacity(opts.probes.len()),
            windowed_densities: Vec::with_capacity(opts.probes.len()),
            below_eta_floor: false,
        };
        for d in &state.shape {
            r.min_eta1 = r.min_eta1.min(d.eta_prime);
            r.max_eta1 = r.max_eta1.max(d.eta_prime);
            r.min_eta2 = r.min_eta2.min(d.eta_double_prime);
            r.max_eta2 = r.max_eta2.max(d.eta_double_prime);
            r.min_mu = r.min_mu.min(d.mu());
            r.max_a2 = r.max_a2.max(d.norm_a_sq);
            r.max_h = r.max_h.max(d.mean_curvature.norm());
        }
        if opts.compute_residual {
            let (form, kind) = (opts.residual_form, opts.laplacian);
            let rhs = eta_rhs(&state.mesh, &state.shape, ambient, form, kind, shape)?;
            if let Some(b) = before {
                let r0 = match cache.take() {
                    Some(c) if c.len() == rhs.len() => c,
                    _ => eta_rhs(&b.mesh, &b.shape, ambient, form, kind, shape)?,
                };
                let per_vertex = residual_from_rhs(b, state, ambient, form, &r0, &rhs)?;
                r.eta_residual = area_weighted_norm(&state.mesh, &per_vertex);
            }
            *cache = Some(rhs);
        }
        for p in &opts.probes {
            if state.t < p.t0() {
                let s = density_of_mesh(&state.mesh, state.t, p, Quadrature::Auto)?;
                r.densities.push(s.density);
                r.windowed_densities.push(s.windowed);
            } else {
                r.densities.push(f64::NAN);
                r.windowed_densities.push(f64::NAN);
            }
        }
        if let Some(floor) = opts.eta_floor {
            r.below_eta_floor = r.min_eta1 < floor || r.min_eta2 < floor;
        }
        Ok(r)
    }
}
