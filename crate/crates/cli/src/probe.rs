//! Kernel densities of a stored snapshot series.

use crate::error::CliError;
use crate::output::{self, ProbeRow};
use std::path::Path;
use symflow_core::ambient::AmbientModel;
use symflow_core::ambient::ParallelForm;
use symflow_core::diagnostics::{density_of_mesh, localized_sample, KernelProbe, Quadrature};
use symflow_core::surface::{shape_field, ShapeOptions};
use symflow_core::Vec6;

/// The ambient a snapshot lives in: ℝ⁴ for `N = 4`, otherwise the product of
/// spheres whose radii are read off the first vertex.
pub fn ambient_of(snapshot: &symflow_core::mesh::MeshSnapshot) -> Result<AmbientModel, CliError> {
    if snapshot.dim == 4 {
        return Ok(AmbientModel::euclidean4());
    }
    let p = Vec6::from_slice(&snapshot.vertices[0]);
    let norm = |f: [f64; 3]| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
    AmbientModel::product_spheres(norm(p.factor(0)), norm(p.factor(1)))
        .map_err(|e| CliError::Format { path: "snapshot".into(), message: e.to_string() })
}

pub fn probe_file(path: &Path, probe: &KernelProbe) -> Result<Vec<ProbeRow>, CliError> {
    let snapshots = output::read_snapshots(path)?;
    let topology = output::infer_topology(&snapshots[0]).ok_or_else(|| CliError::Format {
        path: path.into(),
        message: "mesh is neither a sphere nor a torus".into(),
    })?;
    let ambient = ambient_of(&snapshots[0])?;
    let mut rows = Vec::new();
    for s in snapshots.iter().filter(|s| s.t < probe.t0()) {
        let mesh = s.to_mesh(topology)?;
        let field = shape_field(&mesh, &ambient, &ShapeOptions::default())?;
        let d = density_of_mesh(&mesh, s.t, probe, Quadrature::Auto)?;
        let loc = localized_sample(&mesh, &field, s.t, &ambient, probe, ParallelForm::OmegaPrime)?;
        rows.push(ProbeRow {
            probe: 0,
            t: s.t,
            density: d.density,
            windowed_density: d.windowed,
            companion_integral: loc.companion,
        });
    }
    Ok(rows)
}
