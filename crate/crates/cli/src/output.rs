//! File formats: run and probe CSV tables, JSONL snapshots, the manifest.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use symflow_core::diagnostics::DiagnosticsRecord;
use symflow_core::mesh::{MeshSnapshot, Topology};

/// One line of `snapshots.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    pub t: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl From<&MeshSnapshot> for SnapshotRecord {
    fn from(s: &MeshSnapshot) -> Self {
        SnapshotRecord { t: s.t, dim: s.dim, vertices: s.vertices.clone(), triangles: s.triangles.clone() }
    }
}

impl From<SnapshotRecord> for MeshSnapshot {
    fn from(s: SnapshotRecord) -> Self {
        MeshSnapshot { t: s.t, dim: s.dim, vertices: s.vertices, triangles: s.triangles }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

pub fn write_snapshots(path: &Path, snapshots: &[MeshSnapshot]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for s in snapshots {
        let line = serde_json::to_string(&SnapshotRecord::from(s)).expect("snapshots serialize");
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_snapshots(path: &Path) -> Result<Vec<MeshSnapshot>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SnapshotRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Format { path: path.into(), message: format!("line {}: {e}", i + 1) })?;
        if rec.dim != 4 && rec.dim != 6 {
            return Err(CliError::Format { path: path.into(), message: format!("line {}: N must be 4 or 6", i + 1) });
        }
        if let Some(v) = rec.vertices.iter().find(|v| v.len() != rec.dim) {
            return Err(CliError::Format {
                path: path.into(),
                message: format!("line {}: vertex with {} coordinates, expected {}", i + 1, v.len(), rec.dim),
            });
        }
        out.push(rec.into());
    }
    if out.is_empty() {
        return Err(CliError::Format { path: path.into(), message: "no snapshots".into() });
    }
    Ok(out)
}

/// Topology of a closed triangle mesh from its Euler characteristic
/// `V − F/2`.
pub fn infer_topology(snapshot: &MeshSnapshot) -> Option<Topology> {
    let chi = snapshot.vertices.len() as i64 * 2 - snapshot.triangles.len() as i64;
    match chi {
        4 => Some(Topology::Sphere),
        0 => Some(Topology::Torus),
        _ => None,
    }
}

pub fn run_csv_header(probe_count: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "dt", "area", "min_eta1", "min_eta2", "min_mu", "max_A2", "max_H", "eta_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 0..probe_count {
        h.push(format!("density_{k}"));
        h.push(format!("windowed_{k}"));
    }
    h
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// One row per accepted step.
pub fn write_run_csv(path: &Path, records: &[DiagnosticsRecord], probe_count: usize) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Format { path: path.into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(run_csv_header(probe_count)).map_err(err)?;
    for r in records {
        let mut row = vec![
            num(r.t),
            num(r.dt),
            num(r.area),
            num(r.min_eta1),
            num(r.min_eta2),
            num(r.min_mu),
            num(r.max_a2),
            num(r.max_h),
            num(r.eta_residual),
        ];
        for k in 0..probe_count {
            row.push(num(r.densities.get(k).copied().unwrap_or(f64::NAN)));
            row.push(num(r.windowed_densities.get(k).copied().unwrap_or(f64::NAN)));
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One probe evaluated at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRow {
    pub probe: usize,
    pub t: f64,
    pub density: f64,
    pub windowed_density: f64,
    pub companion_integral: f64,
}

pub fn write_probe_csv(path: &Path, rows: &[ProbeRow]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Format { path: path.into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["probe", "t", "density", "windowed_density", "companion_integral"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.probe.to_string(),
            num(r.t),
            num(r.density),
            num(r.windowed_density),
            num(r.companion_integral),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).expect("JSON values serialize");
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}
