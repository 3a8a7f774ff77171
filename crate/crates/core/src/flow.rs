//! Explicit time integration of `dF/dt = H` with reprojection onto M.

use crate::ambient::{AmbientError, AmbientModel};
use crate::diagnostics::{DiagnosticsError, DiagnosticsRecord, RecordOptions};
use crate::math::Vec6;
use crate::mesh::{MeshError, MeshSnapshot, SurfaceMesh};
use crate::surface::{shape_field, ShapeData, ShapeOptions, SurfaceError};
use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use thiserror::Error;

/// Number of `(t, max|A|²)` samples kept for singular-time estimates.
pub const HISTORY_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Integrator {
    Euler,
    /// Heun's method, reprojecting after each stage.
    Rk2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    /// Step-size constant `κ ∈ (0, 1)`.
    pub cfl: f64,
    pub max_dt: f64,
    pub t_end: f64,
    /// Converged once `max|H|` stays below this for `converge_steps` steps.
    pub converge_h: f64,
    pub converge_steps: usize,
    /// Blow-up once `max|A|²` exceeds this.
    pub blowup_a2: f64,
    /// A step below this length is a stall.
    pub min_dt: f64,
    /// Smallest admissible triangle angle (radians).
    pub min_angle: f64,
    pub integrator: Integrator,
    /// Keep a mesh snapshot every this many steps (0 keeps only the ends).
    pub snapshot_every: usize,
    /// Hard cap on the number of steps (stall when reached before `t_end`).
    pub max_steps: usize,
    pub shape: ShapeOptions,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cfl: 0.5,
            max_dt: 1e-2,
            t_end: 1.0,
            converge_h: 1e-3,
            converge_steps: 10,
            blowup_a2: 1e6,
            min_dt: 1e-14,
            min_angle: 5.0 * core::f64::consts::PI / 180.0,
            integrator: Integrator::Euler,
            snapshot_every: 0,
            max_steps: 1_000_000,
            shape: ShapeOptions::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |what: &'static str| Err(FlowError::InvalidConfig(what));
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad("cfl must lie in (0, 1)");
        }
        if !(self.max_dt > 0.0) {
            return bad("max_dt must be positive");
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad("t_end must be finite and non-negative");
        }
        if !(self.converge_h > 0.0) || !(self.blowup_a2 > 0.0) || !(self.min_dt > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.converge_steps == 0 {
            return bad("converge_steps must be at least 1");
        }
        if !(self.min_angle >= 0.0) {
            return bad("min_angle must be non-negative");
        }
        Ok(())
    }
}

/// Least-squares fit `1/|A|² ≈ (t₀ − t)/C` over a series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularTimeEstimate {
    /// `+∞` when the series shows no approaching singularity.
    pub t0: f64,
    /// Type-I constant `C`; `NaN` when `t0` is infinite.
    pub constant: f64,
}

pub fn estimate_singular_time(series: &[(f64, f64)]) -> SingularTimeEstimate {
    let none = SingularTimeEstimate { t0: f64::INFINITY, constant: f64::NAN };
    let pts: Vec<(f64, f64)> =
        series.iter().filter(|(t, a)| t.is_finite() && *a > 0.0 && a.is_finite()).map(|&(t, a)| (t, 1.0 / a)).collect();
    if pts.len() < 2 {
        return none;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for &(t, y) in &pts {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
    }
    if stt <= 0.0 {
        return none;
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    // a flat or rising 1/|A|² never reaches zero
    if !(slope < 0.0) || slope.abs() <= 1e-12 * my.abs().max(1e-300) / (stt / n).max(1e-300) {
        return none;
    }
    SingularTimeEstimate { t0: -intercept / slope, constant: -1.0 / slope }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub mesh: SurfaceMesh,
    pub shape: Vec<ShapeData>,
    pub step: usize,
    /// Trailing `(t, max|A|²)` samples, oldest first.
    pub history: VecDeque<(f64, f64)>,
}

impl FlowState {
    /// Starts a flow at `t` from a mesh lying on M.
    pub fn new(mesh: SurfaceMesh, ambient: &AmbientModel, t: f64, shape: &ShapeOptions) -> Result<Self, FlowError> {
        let field = shape_field(&mesh, ambient, shape)?;
        let mut state = FlowState { t, mesh, shape: field, step: 0, history: VecDeque::new() };
        let a2 = state.max_a2();
        state.history.push_back((t, a2));
        Ok(state)
    }

    pub fn max_a2(&self) -> f64 {
        self.shape.iter().map(|d| d.norm_a_sq).fold(0.0, f64::max)
    }

    pub fn max_h(&self) -> f64 {
        self.shape.iter().map(|d| d.mean_curvature.norm()).fold(0.0, f64::max)
    }

    pub fn singular_time(&self) -> SingularTimeEstimate {
        let v: Vec<(f64, f64)> = self.history.iter().copied().collect();
        estimate_singular_time(&v)
    }
}

#[derive(Debug, Error, Clone)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("blow-up at t = {t}: max|A|² = {max_a2:e} (estimated t₀ = {})", estimate.t0)]
    BlowUp { t: f64, max_a2: f64, estimate: SingularTimeEstimate, state: Box<FlowState> },
    #[error("stalled at t = {t}: step {dt:e} below the minimum")]
    Stall { t: f64, dt: f64 },
    #[error("mesh quality floor violated at t = {t}: min angle {min_angle} rad")]
    MeshQuality { t: f64, min_angle: f64 },
    #[error("non-finite vertex positions at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// `min(max_dt, κ/max|A|², κ·h_min²/2, t_end − t)`.
pub fn time_step(state: &FlowState, config: &FlowConfig) -> f64 {
    let mut dt = config.max_dt;
    let a2 = state.max_a2();
    if a2 > 0.0 {
        dt = dt.min(config.cfl / a2);
    }
    let h = state.mesh.min_edge_length();
    dt = dt.min(config.cfl * h * h / 2.0);
    dt.min(config.t_end - state.t)
}

fn advance(ambient: &AmbientModel, base: &[Vec6], velocity: &[Vec6], dt: f64, t: f64) -> Result<Vec<Vec6>, FlowError> {
    base.iter()
        .zip(velocity)
        .map(|(x, h)| {
            let y = x.axpy(dt, h);
            if !y.is_finite() {
                return Err(FlowError::NonFinite { t });
            }
            Ok(ambient.project_to_manifold(&y)?)
        })
        .collect()
}

/// One accepted step of the flow.
pub fn step(state: &FlowState, ambient: &AmbientModel, config: &FlowConfig) -> Result<FlowState, FlowError> {
    let dt = time_step(state, config);
    // a short final step up to t_end is not a stall
    if !(dt > 0.0) || (dt < config.min_dt && dt < config.t_end - state.t) {
        return Err(FlowError::Stall { t: state.t, dt });
    }
    let x0 = state.mesh.positions();
    let h0: Vec<Vec6> = state.shape.iter().map(|d| d.mean_curvature).collect();
    let positions = match config.integrator {
        Integrator::Euler => advance(ambient, x0, &h0, dt, state.t)?,
        Integrator::Rk2 => {
            let x1 = advance(ambient, x0, &h0, dt, state.t)?;
            let mesh1 = state.mesh.with_positions(x1)?;
            let f1 = shape_field(&mesh1, ambient, &config.shape)?;
            let avg: Vec<Vec6> = h0.iter().zip(&f1).map(|(a, d)| (*a + d.mean_curvature).scale(0.5)).collect();
            advance(ambient, x0, &avg, dt, state.t)?
        }
    };
    let t = state.t + dt;
    let mesh = state.mesh.with_positions(positions)?;
    if config.min_angle > 0.0 {
        let min_angle = mesh.min_angle();
        if min_angle < config.min_angle {
            return Err(FlowError::MeshQuality { t, min_angle });
        }
    }
    let shape = shape_field(&mesh, ambient, &config.shape)?;
    let mut history = state.history.clone();
    let mut next = FlowState { t, mesh, shape, step: state.step + 1, history: VecDeque::new() };
    let a2 = next.max_a2();
    history.push_back((t, a2));
    while history.len() > HISTORY_LEN {
        history.pop_front();
    }
    next.history = history;
    if a2 > config.blowup_a2 {
        let estimate = next.singular_time();
        return Err(FlowError::BlowUp { t, max_a2: a2, estimate, state: Box::new(next) });
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopReason {
    ReachedEnd,
    Converged,
    BlowUp(SingularTimeEstimate),
    Stall,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::ReachedEnd => "reached-t_end",
            StopReason::Converged => "converged",
            StopReason::BlowUp(_) => "blow-up",
            StopReason::Stall => "stall",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub final_state: FlowState,
    /// Diagnostics of the initial surface (not a step).
    pub initial: DiagnosticsRecord,
    /// One record per accepted step.
    pub records: Vec<DiagnosticsRecord>,
    pub stop: StopReason,
    pub snapshots: Vec<MeshSnapshot>,
}

/// Runs the flow with default record options.
pub fn run(initial: SurfaceMesh, ambient: &AmbientModel, config: &FlowConfig) -> Result<RunOutcome, FlowError> {
    run_with(initial, ambient, config, &RecordOptions::default())
}

/// Runs the flow until `t_end`, convergence, blow-up or stall, recording
/// diagnostics after every accepted step. Mesh-quality violations and
/// numerical failures are returned as errors.
pub fn run_with(
    initial: SurfaceMesh,
    ambient: &AmbientModel,
    config: &FlowConfig,
    record: &RecordOptions,
) -> Result<RunOutcome, FlowError> {
    config.validate()?;
    let dim = ambient.embedding_dim();
    let mut state = FlowState::new(initial, ambient, 0.0, &config.shape)?;
    let mut rhs_cache = None;
    let first = DiagnosticsRecord::build_cached(None, &state, ambient, record, &config.shape, &mut rhs_cache)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    snapshots.push(MeshSnapshot::from_mesh(state.t, dim, &state.mesh));
    let mut calm = 0usize;
    let stop = loop {
        if state.t >= config.t_end {
            break StopReason::ReachedEnd;
        }
        if state.step >= config.max_steps {
            break StopReason::Stall;
        }
        let next = match step(&state, ambient, config) {
            Ok(s) => s,
            Err(FlowError::BlowUp { estimate, state: blown, .. }) => {
                records.push(DiagnosticsRecord::build_cached(
                    Some(&state),
                    &blown,
                    ambient,
                    record,
                    &config.shape,
                    &mut rhs_cache,
                )?);
                state = *blown;
                break StopReason::BlowUp(estimate);
            }
            Err(FlowError::Stall { .. }) => break StopReason::Stall,
            Err(e) => return Err(e),
        };
        records.push(DiagnosticsRecord::build_cached(
            Some(&state),
            &next,
            ambient,
            record,
            &config.shape,
            &mut rhs_cache,
        )?);
        state = next;
        if config.snapshot_every > 0 && state.step % config.snapshot_every == 0 {
            snapshots.push(MeshSnapshot::from_mesh(state.t, dim, &state.mesh));
        }
        if state.max_h() < config.converge_h {
            calm += 1;
            if calm >= config.converge_steps {
                break StopReason::Converged;
            }
        } else {
            calm = 0;
        }
    };
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(MeshSnapshot::from_mesh(state.t, dim, &state.mesh));
    }
    Ok(RunOutcome { final_state: state, initial: first, records, stop, snapshots })
}
