//! Closed triangle meshes with vertex positions in ℝ⁶, icosahedral spheres,
//! periodic torus grids, stencils and the cotangent Laplacian.

use crate::math::{sqrt, Vec6};
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, vertex: usize, count: usize },
    #[error("triangle {0} has a repeated vertex")]
    DegenerateTriangle(usize),
    #[error("edge ({0}, {1}) is not shared by exactly two triangles with opposite winding")]
    NotClosed(usize, usize),
    #[error("Euler characteristic {found} does not match the {expected:?} topology")]
    WrongTopology { expected: Topology, found: i64 },
    #[error("vertex {0} is not finite")]
    NonFinite(usize),
    #[error("vertex count changed from {expected} to {found}")]
    VertexCountMismatch { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    Sphere,
    Torus,
}

impl Topology {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            Topology::Sphere => 2,
            Topology::Torus => 0,
        }
    }
}

/// Index lists stored back to back.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Csr {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl Csr {
    fn from_lists(lists: &[Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for l in lists {
            items.extend_from_slice(l);
            offsets.push(items.len());
        }
        Csr { offsets, items }
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.items[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Connectivity shared by every snapshot of a flow.
#[derive(Clone, Debug, PartialEq)]
pub struct Connectivity {
    triangles: Vec<[usize; 3]>,
    topology: Topology,
    vertex_count: usize,
    /// Undirected edges `(i, j)`, `i < j`, with the two opposite vertices.
    edges: Vec<(usize, usize, usize, usize)>,
    one_ring: Csr,
    two_ring: Csr,
    vertex_triangles: Csr,
}

impl Connectivity {
    pub fn new(vertex_count: usize, triangles: Vec<[usize; 3]>, topology: Topology) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertex_count {
                    return Err(MeshError::IndexOutOfRange { triangle: t, vertex: v, count: vertex_count });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        // directed edge -> opposite vertex
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if directed.insert((a, b), c).is_some() {
                    return Err(MeshError::NotClosed(a.min(b), a.max(b)));
                }
            }
        }
        let mut edges = Vec::new();
        for (&(a, b), &c) in &directed {
            match directed.get(&(b, a)) {
                Some(&d) => {
                    if a < b {
                        edges.push((a, b, c, d));
                    }
                }
                None => return Err(MeshError::NotClosed(a.min(b), a.max(b))),
            }
        }
        let chi = vertex_count as i64 - edges.len() as i64 + triangles.len() as i64;
        if chi != topology.euler_characteristic() {
            return Err(MeshError::WrongTopology { expected: topology, found: chi });
        }

        let mut ring: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for &(a, b, _, _) in &edges {
            ring[a].push(b);
            ring[b].push(a);
        }
        for r in ring.iter_mut() {
            r.sort_unstable();
        }
        let mut two: Vec<Vec<usize>> = Vec::with_capacity(vertex_count);
        for v in 0..vertex_count {
            let mut s: Vec<usize> = ring[v].clone();
            for &n in &ring[v] {
                s.extend_from_slice(&ring[n]);
            }
            s.sort_unstable();
            s.dedup();
            s.retain(|&x| x != v);
            two.push(s);
        }
        let mut vt: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vt[v].push(t);
            }
        }
        Ok(Connectivity {
            triangles,
            topology,
            vertex_count,
            edges,
            one_ring: Csr::from_lists(&ring),
            two_ring: Csr::from_lists(&two),
            vertex_triangles: Csr::from_lists(&vt),
        })
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize, usize, usize)] {
        &self.edges
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        self.one_ring.row(v)
    }

    pub fn two_ring(&self, v: usize) -> &[usize] {
        self.two_ring.row(v)
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        self.vertex_triangles.row(v)
    }
}

/// An oriented closed triangle mesh immersed in ℝ⁶ (ℝ⁴ meshes keep the last
/// two coordinates zero).
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    positions: Vec<Vec6>,
    connectivity: Arc<Connectivity>,
}

impl SurfaceMesh {
    pub fn new(positions: Vec<Vec6>, triangles: Vec<[usize; 3]>, topology: Topology) -> Result<Self, MeshError> {
        let conn = Connectivity::new(positions.len(), triangles, topology)?;
        Self::with_connectivity(positions, Arc::new(conn))
    }

    pub fn with_connectivity(positions: Vec<Vec6>, connectivity: Arc<Connectivity>) -> Result<Self, MeshError> {
        if positions.len() != connectivity.vertex_count() {
            return Err(MeshError::VertexCountMismatch {
                expected: connectivity.vertex_count(),
                found: positions.len(),
            });
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        Ok(SurfaceMesh { positions, connectivity })
    }

    /// Same connectivity, new positions.
    pub fn with_positions(&self, positions: Vec<Vec6>) -> Result<Self, MeshError> {
        Self::with_connectivity(positions, self.connectivity.clone())
    }

    pub fn positions(&self) -> &[Vec6] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> Vec6 {
        self.positions[v]
    }

    pub fn connectivity(&self) -> &Arc<Connectivity> {
        &self.connectivity
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        self.connectivity.triangles()
    }

    pub fn topology(&self) -> Topology {
        self.connectivity.topology()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn same_connectivity(&self, other: &SurfaceMesh) -> bool {
        Arc::ptr_eq(&self.connectivity, &other.connectivity) || *self.connectivity == *other.connectivity
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles()[t];
        let (u, v) = (self.positions[b] - self.positions[a], self.positions[c] - self.positions[a]);
        triangle_area_from_edges(&u, &v)
    }

    pub fn area(&self) -> f64 {
        crate::math::compensated_sum((0..self.triangles().len()).map(|t| self.triangle_area(t)))
    }

    pub fn min_edge_length(&self) -> f64 {
        self.connectivity
            .edges()
            .iter()
            .map(|&(a, b, _, _)| (self.positions[a] - self.positions[b]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.connectivity.edges();
        crate::math::compensated_sum(e.iter().map(|&(a, b, _, _)| (self.positions[a] - self.positions[b]).norm()))
            / e.len() as f64
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for tri in self.triangles() {
            for k in 0..3 {
                let p = self.positions[tri[k]];
                let u = self.positions[tri[(k + 1) % 3]] - p;
                let v = self.positions[tri[(k + 2) % 3]] - p;
                let c = u.dot(&v) / (u.norm() * v.norm());
                best = best.min(crate::math::acos(c));
            }
        }
        best
    }

    /// Mixed Voronoi area of each vertex; the areas sum to the mesh area.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.vertex_count()];
        for tri in self.triangles() {
            let p = [self.positions[tri[0]], self.positions[tri[1]], self.positions[tri[2]]];
            let contrib = mixed_areas(&p);
            for k in 0..3 {
                areas[tri[k]] += contrib[k];
            }
        }
        areas
    }

    /// Cotangent Laplace–Beltrami of a vertex field, normalized by the mixed
    /// Voronoi area.
    pub fn cotan_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let areas = self.vertex_areas();
        let mut acc = vec![0.0; self.vertex_count()];
        for &(a, b, c, d) in self.connectivity.edges() {
            let w = 0.5 * (self.cotan_at(c, a, b) + self.cotan_at(d, a, b));
            let diff = values[b] - values[a];
            acc[a] += w * diff;
            acc[b] -= w * diff;
        }
        acc.iter().zip(&areas).map(|(s, ar)| s / ar).collect()
    }

    /// Cotangent of the angle at `apex` in the triangle `(apex, a, b)`.
    fn cotan_at(&self, apex: usize, a: usize, b: usize) -> f64 {
        let u = self.positions[a] - self.positions[apex];
        let v = self.positions[b] - self.positions[apex];
        let cross = cross_norm(&u, &v);
        u.dot(&v) / cross
    }
}

fn cross_norm(u: &Vec6, v: &Vec6) -> f64 {
    sqrt((u.norm_sq() * v.norm_sq() - u.dot(v) * u.dot(v)).max(0.0))
}

pub(crate) fn triangle_area_from_edges(u: &Vec6, v: &Vec6) -> f64 {
    0.5 * cross_norm(u, v)
}

/// Per-corner mixed Voronoi area of one triangle.
fn mixed_areas(p: &[Vec6; 3]) -> [f64; 3] {
    let area = triangle_area_from_edges(&(p[1] - p[0]), &(p[2] - p[0]));
    let mut out = [0.0; 3];
    let mut obtuse = None;
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let v = p[(k + 2) % 3] - p[k];
        if u.dot(&v) < 0.0 {
            obtuse = Some(k);
        }
    }
    match obtuse {
        Some(o) => {
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = if k == o { area / 2.0 } else { area / 4.0 };
            }
        }
        None => {
            for k in 0..3 {
                // Voronoi region: (|PR|² cot Q + |PQ|² cot R) / 8
                let (q, r) = ((k + 1) % 3, (k + 2) % 3);
                let cot = |apex: usize, a: usize, b: usize| {
                    let u = p[a] - p[apex];
                    let v = p[b] - p[apex];
                    u.dot(&v) / cross_norm(&u, &v)
                };
                let pr2 = (p[r] - p[k]).norm_sq();
                let pq2 = (p[q] - p[k]).norm_sq();
                out[k] = (pr2 * cot(q, k, r) + pq2 * cot(r, k, q)) / 8.0;
            }
        }
    }
    out
}

/// Icosahedral subdivision of the unit sphere in ℝ³ with outward winding.
/// Level `l` has `10·4ˡ + 2` vertices.
pub fn icosphere(level: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let phi = (1.0 + sqrt(5.0)) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut verts: Vec<[f64; 3]> = raw.iter().map(normalize3).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3(&[p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (verts, faces)
}

fn normalize3(p: &[f64; 3]) -> [f64; 3] {
    let n = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Periodic `nu × nv` grid on the parameter torus `[0,1)²`, returned as
/// parameter pairs and consistently wound triangles.
pub fn torus_grid(nu: usize, nv: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut params = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            params.push([i as f64 / nu as f64, j as f64 / nv as f64]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (params, tris)
}

/// Round sphere of radius `r` in the `x₁x₂x₃` coordinate space of ℝ⁴,
/// centred at `center`.
pub fn round_sphere_r4(level: u32, r: f64, center: &Vec6) -> SurfaceMesh {
    let (v, f) = icosphere(level);
    let pos = v.iter().map(|p| *center + Vec6::new([r * p[0], r * p[1], r * p[2], 0.0, 0.0, 0.0])).collect();
    SurfaceMesh::new(pos, f, Topology::Sphere).expect("icosphere is a closed sphere")
}

/// Clifford-type torus `(a cos u, a sin u, b cos v, b sin v)` in ℝ⁴.
pub fn product_torus_r4(nu: usize, nv: usize, a: f64, b: f64) -> SurfaceMesh {
    let (params, tris) = torus_grid(nu, nv);
    let tau = 2.0 * core::f64::consts::PI;
    let pos = params
        .iter()
        .map(|&[s, t]| {
            let (u, v) = (tau * s, tau * t);
            Vec6::new([
                a * crate::math::cos(u),
                a * crate::math::sin(u),
                b * crate::math::cos(v),
                b * crate::math::sin(v),
                0.0,
                0.0,
            ])
        })
        .collect();
    SurfaceMesh::new(pos, tris, Topology::Torus).expect("torus grid is a closed torus")
}

/// A mesh state at one time, in the layout used for JSON-lines snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshSnapshot {
    pub t: f64,
    /// Embedding dimension (4 or 6); vertex rows carry this many coordinates.
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl MeshSnapshot {
    pub fn from_mesh(t: f64, dim: usize, mesh: &SurfaceMesh) -> Self {
        MeshSnapshot {
            t,
            dim,
            vertices: mesh.positions().iter().map(|p| p.0[..dim].to_vec()).collect(),
            triangles: mesh.triangles().to_vec(),
        }
    }

    pub fn to_mesh(&self, topology: Topology) -> Result<SurfaceMesh, MeshError> {
        let pos = self.vertices.iter().map(|v| Vec6::from_slice(v)).collect();
        SurfaceMesh::new(pos, self.triangles.clone(), topology)
    }

    /// Positions rebuilt on an existing connectivity (no revalidation cost).
    pub fn to_mesh_with(&self, connectivity: &Arc<Connectivity>) -> Result<SurfaceMesh, MeshError> {
        let pos = self.vertices.iter().map(|v| Vec6::from_slice(v)).collect();
        SurfaceMesh::with_connectivity(pos, connectivity.clone())
    }
}
