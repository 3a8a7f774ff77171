//! Discrete extrinsic geometry of a surface Σ ⊂ M ⊂ ℝ⁶: per-vertex frames,
//! second fundamental form, mean curvature and the pull-backs `η` of the
//! parallel forms, from least-squares jets fitted over the vertex 2-ring.

use crate::ambient::{AmbientError, AmbientModel, ParallelForm};
use crate::forms::{pfaffian, TwoForm4};
use crate::math::{cholesky_solve, cross3, dot3, norm3, sqrt, Vec6};
use crate::mesh::{Connectivity, MeshError, SurfaceMesh, Topology};
use alloc::sync::Arc;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("jet fit is rank deficient at vertex {vertex}")]
    DegenerateStencil { vertex: usize },
    #[error("vertex {vertex} is off the ambient manifold by {defect:e}")]
    NotOnManifold { vertex: usize, defect: f64 },
    #[error("map value at vertex {vertex} is not a unit vector")]
    NotUnit { vertex: usize },
    #[error("unsupported jet degree {0} (expected 2, 3 or 4)")]
    UnsupportedDegree(usize),
    #[error("surface is not a graph over the first factor at vertex {vertex}")]
    NotAGraph { vertex: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
}

/// Jet-fit settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeOptions {
    /// Total degree of the fitted polynomial (2, 3 or 4).
    pub jet_degree: usize,
    /// Refits after re-aligning the tangent plane with the fitted slope.
    pub tilt_iterations: usize,
}

impl Default for ShapeOptions {
    fn default() -> Self {
        ShapeOptions { jet_degree: 4, tilt_iterations: 0 }
    }
}

const MAX_MONOMIALS: usize = 14;

/// Monomials `u, v, u², uv, v², u³, …` without the constant, and their degrees.
fn monomials(u: f64, v: f64, out: &mut [f64; MAX_MONOMIALS], degrees: &mut [i32; MAX_MONOMIALS], degree: usize) {
    let mut k = 0;
    let mut upow = [1.0; 5];
    let mut vpow = [1.0; 5];
    for d in 1..5 {
        upow[d] = upow[d - 1] * u;
        vpow[d] = vpow[d - 1] * v;
    }
    for d in 1..=degree {
        for j in 0..=d {
            out[k] = upow[d - j] * vpow[j];
            degrees[k] = d as i32;
            k += 1;
        }
    }
}

/// First and second partial derivatives at the origin of a fitted jet.
#[derive(Clone, Copy, Debug)]
struct Jet<const R: usize> {
    du: [f64; R],
    dv: [f64; R],
    duu: [f64; R],
    duv: [f64; R],
    dvv: [f64; R],
}

fn solve_jet<const M: usize, const R: usize>(coords: &[[f64; 2]], rhs: &[[f64; R]], degree: usize) -> Option<Jet<R>> {
    if coords.len() < M + 1 {
        return None;
    }
    let scale = coords.iter().map(|c| c[0].abs().max(c[1].abs())).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let inv = 1.0 / scale;
    let mut ata = [[0.0; M]; M];
    let mut atb = [[0.0; R]; M];
    let mut mono = [0.0; MAX_MONOMIALS];
    let mut degs = [0i32; MAX_MONOMIALS];
    for (c, b) in coords.iter().zip(rhs) {
        monomials(c[0] * inv, c[1] * inv, &mut mono, &mut degs, degree);
        for i in 0..M {
            let mi = mono[i];
            for j in i..M {
                ata[i][j] += mi * mono[j];
            }
            for r in 0..R {
                atb[i][r] += mi * b[r];
            }
        }
    }
    for i in 0..M {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }
    cholesky_solve(&ata, &mut atb, 1e-12)?;
    let s2 = inv * inv;
    let mut jet = Jet { du: [0.0; R], dv: [0.0; R], duu: [0.0; R], duv: [0.0; R], dvv: [0.0; R] };
    for r in 0..R {
        jet.du[r] = atb[0][r] * inv;
        jet.dv[r] = atb[1][r] * inv;
        jet.duu[r] = 2.0 * atb[2][r] * s2;
        jet.duv[r] = atb[3][r] * s2;
        jet.dvv[r] = 2.0 * atb[4][r] * s2;
    }
    Some(jet)
}

fn fit_jet<const R: usize>(coords: &[[f64; 2]], rhs: &[[f64; R]], degree: usize) -> Option<Jet<R>> {
    match degree {
        2 => solve_jet::<5, R>(coords, rhs, 2),
        3 => solve_jet::<9, R>(coords, rhs, 3),
        4 => solve_jet::<14, R>(coords, rhs, 4),
        _ => None,
    }
}

fn check_degree(opts: &ShapeOptions) -> Result<(), SurfaceError> {
    if (2..=4).contains(&opts.jet_degree) {
        Ok(())
    } else {
        Err(SurfaceError::UnsupportedDegree(opts.jet_degree))
    }
}

/// Per-vertex extrinsic data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeData {
    pub position: Vec6,
    /// `e₁, e₂` tangent to Σ with `dμ(e₁, e₂) > 0`; `e₃, e₄` normal to Σ in
    /// `TM`, with `e₁..e₄` positive for the orientation of `(ω′)²`.
    pub frame: [Vec6; 4],
    /// `h[a][i][j] = <A(eᵢ, eⱼ), e_{a+3}>` (zero-based `a, i, j`).
    pub h: [[[f64; 2]; 2]; 2],
    pub mean_curvature: Vec6,
    pub norm_a_sq: f64,
    pub eta_prime: f64,
    pub eta_double_prime: f64,
}

impl ShapeData {
    /// `A(eᵢ, eⱼ)` rebuilt from the normal components.
    pub fn second_fundamental_form(&self, i: usize, j: usize) -> Vec6 {
        self.frame[2].scale(self.h[0][i][j]).axpy(self.h[1][i][j], &self.frame[3])
    }

    /// `Σₖ (h₃₁ₖ − h₄₂ₖ)² + (h₃₂ₖ + h₄₁ₖ)²` in the stored frame.
    pub fn bracket(&self) -> f64 {
        let h = &self.h;
        let mut s = 0.0;
        for k in 0..2 {
            let a = h[0][0][k] - h[1][1][k];
            let b = h[0][1][k] + h[1][0][k];
            s += a * a + b * b;
        }
        s
    }

    /// `Σₖ h₃₁ₖh₄₂ₖ − h₃₂ₖh₄₁ₖ`; twice its absolute value is at most `|A|²`.
    pub fn cross_term(&self) -> f64 {
        let h = &self.h;
        (0..2).map(|k| h[0][0][k] * h[1][1][k] - h[0][1][k] * h[1][0][k]).sum()
    }

    /// `η′ + η″`.
    pub fn mu(&self) -> f64 {
        self.eta_prime + self.eta_double_prime
    }

    pub fn eta(&self, form: ParallelForm, ambient: &AmbientModel) -> f64 {
        match form {
            ParallelForm::OmegaPrime => self.eta_prime,
            ParallelForm::OmegaDoublePrime => self.eta_double_prime,
            _ => pullback_eta(self, ambient, form),
        }
    }

    /// Same data with `e₃` and `e₄` exchanged, i.e. positively oriented for
    /// `(ω″)²`.
    pub fn with_swapped_normals(&self) -> ShapeData {
        let mut out = *self;
        out.frame.swap(2, 3);
        out.h.swap(0, 1);
        out
    }

    /// Rotates `{e₁, e₂}` by `theta` and `{e₃, e₄}` by `phi`.
    pub fn rotated(&self, theta: f64, phi: f64) -> ShapeData {
        let (ct, st) = (crate::math::cos(theta), crate::math::sin(theta));
        let (cp, sp) = (crate::math::cos(phi), crate::math::sin(phi));
        let f = &self.frame;
        let frame = [
            f[0].scale(ct).axpy(st, &f[1]),
            f[0].scale(-st).axpy(ct, &f[1]),
            f[2].scale(cp).axpy(sp, &f[3]),
            f[2].scale(-sp).axpy(cp, &f[3]),
        ];
        let rot_t = [[ct, st], [-st, ct]];
        let rot_n = [[cp, sp], [-sp, cp]];
        let mut h = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for b in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                s += rot_n[a][b] * rot_t[i][k] * rot_t[j][l] * self.h[b][k][l];
                            }
                        }
                    }
                    h[a][i][j] = s;
                }
            }
        }
        ShapeData { frame, h, ..*self }
    }

    /// Components of a parallel form in the stored frame.
    pub fn form_matrix(&self, ambient: &AmbientModel, form: ParallelForm) -> TwoForm4 {
        let mut c = [0.0; 6];
        for (k, &(i, j)) in crate::forms::PAIRS.iter().enumerate() {
            c[k] = ambient.eval_form(&self.position, form, &self.frame[i], &self.frame[j]);
        }
        TwoForm4::from_components(c)
    }

    /// The frame in which `form` (`ω′` or `ω″`) has components
    /// `[[0,η,ζ,0],[−η,0,0,−ζ],[−ζ,0,0,η],[0,ζ,−η,0]]` with `ζ = √(1−η²) ≥ 0`:
    /// `{e₃, e₄}` is rotated (after swapping for `ω″`) to make `ω(e₁, e₄) = 0`.
    pub fn adapted_to(&self, ambient: &AmbientModel, form: ParallelForm) -> ShapeData {
        let base = if form == ParallelForm::OmegaDoublePrime { self.with_swapped_normals() } else { *self };
        let w13 = ambient.eval_form(&base.position, form, &base.frame[0], &base.frame[2]);
        let w14 = ambient.eval_form(&base.position, form, &base.frame[0], &base.frame[3]);
        let r = sqrt(w13 * w13 + w14 * w14);
        if r < 1e-300 {
            return base;
        }
        // e₃' = c e₃ + s e₄ with (c, s) ∝ (ω₁₃, ω₁₄)
        let phi = crate::math::atan2(w14, w13);
        base.rotated(0.0, phi)
    }

    /// `∂ₖη = √(1−η²)(h₄₁ₖ + h₃₂ₖ)`, evaluated in the frame returned by
    /// [`ShapeData::adapted_to`] for `form`.
    pub fn eta_gradient_formula(&self, ambient: &AmbientModel, form: ParallelForm) -> [f64; 2] {
        let a = self.adapted_to(ambient, form);
        let eta = a.eta(form, ambient);
        let zeta = sqrt((1.0 - eta * eta).max(0.0));
        [zeta * (a.h[1][0][0] + a.h[0][1][0]), zeta * (a.h[1][0][1] + a.h[0][1][1])]
    }
}

/// `η = ω(e₁, e₂)`.
pub fn pullback_eta(data: &ShapeData, ambient: &AmbientModel, form: ParallelForm) -> f64 {
    ambient.eval_form(&data.position, form, &data.frame[0], &data.frame[1])
}

fn gram_schmidt2(a: &Vec6, b: &Vec6) -> Option<(Vec6, Vec6)> {
    let e1 = a.normalized()?;
    let e2 = b.axpy(-b.dot(&e1), &e1).normalized()?;
    Some((e1, e2))
}

/// Oriented tangent plane guess from the sum of incident triangle bivectors.
fn initial_plane(mesh: &SurfaceMesh, v: usize) -> Option<(Vec6, Vec6, [[f64; 6]; 6])> {
    let p = mesh.position(v);
    let mut b = [[0.0; 6]; 6];
    for &t in mesh.connectivity().vertex_triangles(v) {
        let tri = mesh.triangles()[t];
        let k = tri.iter().position(|&x| x == v)?;
        let x = mesh.position(tri[(k + 1) % 3]) - p;
        let y = mesh.position(tri[(k + 2) % 3]) - p;
        for i in 0..6 {
            for j in 0..6 {
                b[i][j] += x[i] * y[j] - x[j] * y[i];
            }
        }
    }
    let row_norm = |i: usize| b[i].iter().map(|x| x * x).sum::<f64>();
    let mut best = 0;
    for i in 1..6 {
        if row_norm(i) > row_norm(best) {
            best = i;
        }
    }
    let t1 = Vec6::new(b[best]);
    let mut bt1 = Vec6::ZERO;
    for i in 0..6 {
        for j in 0..6 {
            bt1[i] += b[i][j] * t1[j];
        }
    }
    let (e1, e2) = gram_schmidt2(&t1, &bt1)?;
    Some((e1, e2, b))
}

fn bivector_eval(b: &[[f64; 6]; 6], x: &Vec6, y: &Vec6) -> f64 {
    let mut s = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            s += x[i] * b[i][j] * y[j];
        }
    }
    s
}

/// Deterministic orthonormal pair completing `{e₁, e₂}` in `T_pM`, oriented
/// so that `(ω′)²` is positive on `e₁..e₄`.
fn normal_pair(ambient: &AmbientModel, p: &Vec6, e1: &Vec6, e2: &Vec6) -> (Vec6, Vec6) {
    let candidates = ambient.tangent_frame(p);
    let mut picked: Vec<Vec6> = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut best = Vec6::ZERO;
        for c in &candidates {
            let mut r = c.axpy(-c.dot(e1), e1);
            r = r.axpy(-r.dot(e2), e2);
            for q in &picked {
                r = r.axpy(-r.dot(q), q);
            }
            if r.norm_sq() > best.norm_sq() * (1.0 + 1e-12) {
                best = r;
            }
        }
        picked.push(best.normalized().unwrap_or(Vec6::ZERO));
    }
    let (e3, mut e4) = (picked[0], picked[1]);
    let frame = [*e1, *e2, e3, e4];
    let mut c = [0.0; 6];
    for (k, &(i, j)) in crate::forms::PAIRS.iter().enumerate() {
        c[k] = ambient.eval_form(p, ParallelForm::OmegaPrime, &frame[i], &frame[j]);
    }
    if pfaffian(&TwoForm4::from_components(c)) < 0.0 {
        e4 = -e4;
    }
    (e3, e4)
}

/// Tangent coordinates of the 2-ring of `v` in the plane `(t1, t2)`, and the
/// offsets from the centre vertex.
fn stencil_coords(
    mesh: &SurfaceMesh,
    v: usize,
    t1: &Vec6,
    t2: &Vec6,
    coords: &mut Vec<[f64; 2]>,
    offsets: &mut Vec<Vec6>,
) {
    let p = mesh.position(v);
    coords.clear();
    offsets.clear();
    for &q in mesh.connectivity().two_ring(v) {
        let d = mesh.position(q) - p;
        coords.push([d.dot(t1), d.dot(t2)]);
        offsets.push(d);
    }
}

/// Orthonormal complement of `(t1, t2)` in the first `dim` coordinates.
fn normal_basis(t1: &Vec6, t2: &Vec6, dim: usize) -> [Vec6; 4] {
    let mut out = [Vec6::ZERO; 4];
    for slot in 0..dim - 2 {
        let mut best = Vec6::ZERO;
        for k in 0..dim {
            let a = Vec6::axis(k);
            let mut r = a.axpy(-a.dot(t1), t1);
            r = r.axpy(-r.dot(t2), t2);
            for q in out.iter().take(slot) {
                r = r.axpy(-r.dot(q), q);
            }
            if r.norm_sq() > best.norm_sq() * (1.0 + 1e-12) {
                best = r;
            }
        }
        out[slot] = best.scale(1.0 / best.norm());
    }
    out
}

/// Derivatives at the centre of the fitted parametrization
/// `(u, v) ↦ p + u t₁ + v t₂ + w(u, v)`, out-of-plane parts only.
struct NormalJet {
    du: Vec6,
    dv: Vec6,
    duu: Vec6,
    duv: Vec6,
    dvv: Vec6,
}

fn fit_normal<const R: usize>(
    coords: &[[f64; 2]],
    offsets: &[Vec6],
    basis: &[Vec6; 4],
    degree: usize,
) -> Option<NormalJet> {
    let rhs: Vec<[f64; R]> = offsets.iter().map(|d| core::array::from_fn(|r| d.dot(&basis[r]))).collect();
    let jet = fit_jet::<R>(coords, &rhs, degree)?;
    let lift = |c: &[f64; R]| (0..R).fold(Vec6::ZERO, |acc, r| acc.axpy(c[r], &basis[r]));
    Some(NormalJet {
        du: lift(&jet.du),
        dv: lift(&jet.dv),
        duu: lift(&jet.duu),
        duv: lift(&jet.duv),
        dvv: lift(&jet.dvv),
    })
}

fn fit_normal_jet(
    coords: &[[f64; 2]],
    offsets: &[Vec6],
    t1: &Vec6,
    t2: &Vec6,
    dim: usize,
    degree: usize,
) -> Option<NormalJet> {
    let basis = normal_basis(t1, t2, dim);
    match dim {
        4 => fit_normal::<2>(coords, offsets, &basis, degree),
        _ => fit_normal::<4>(coords, offsets, &basis, degree),
    }
}

/// Extrinsic data at one vertex.
pub fn shape_data(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    v: usize,
    opts: &ShapeOptions,
) -> Result<ShapeData, SurfaceError> {
    check_degree(opts)?;
    let mut coords = Vec::new();
    let mut offsets = Vec::new();
    shape_data_with(mesh, ambient, v, opts, &mut coords, &mut offsets)
}

fn shape_data_with(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    v: usize,
    opts: &ShapeOptions,
    coords: &mut Vec<[f64; 2]>,
    offsets: &mut Vec<Vec6>,
) -> Result<ShapeData, SurfaceError> {
    let degenerate = SurfaceError::DegenerateStencil { vertex: v };
    let p = mesh.position(v);
    let defect = ambient.manifold_defect(&p);
    if defect > 1e-9 {
        return Err(SurfaceError::NotOnManifold { vertex: v, defect });
    }
    if mesh.connectivity().one_ring(v).len() < 3 {
        return Err(degenerate);
    }
    let (g1, g2, biv) = initial_plane(mesh, v).ok_or(degenerate.clone())?;
    let (mut t1, mut t2) = gram_schmidt2(&ambient.tangent_projection(&p, &g1), &ambient.tangent_projection(&p, &g2))
        .ok_or(degenerate.clone())?;

    let dim = ambient.embedding_dim();
    let mut jet;
    let mut iteration = 0;
    loop {
        stencil_coords(mesh, v, &t1, &t2, coords, offsets);
        jet = fit_normal_jet(coords, offsets, &t1, &t2, dim, opts.jet_degree).ok_or(degenerate.clone())?;
        if iteration == opts.tilt_iterations {
            break;
        }
        iteration += 1;
        let xu = t1 + jet.du;
        let xv = t2 + jet.dv;
        let (n1, n2) = gram_schmidt2(&ambient.tangent_projection(&p, &xu), &ambient.tangent_projection(&p, &xv))
            .ok_or(degenerate.clone())?;
        t1 = n1;
        t2 = n2;
    }

    let xu = t1 + jet.du;
    let xv = t2 + jet.dv;
    let (f1, mut f2) = gram_schmidt2(&ambient.tangent_projection(&p, &xu), &ambient.tangent_projection(&p, &xv))
        .ok_or(degenerate.clone())?;
    if bivector_eval(&biv, &f1, &f2) < 0.0 {
        f2 = -f2;
    }
    // f₁ = T₁₁ X_u, f₂ = T₂₁ X_u + T₂₂ X_v
    let a11 = xu.dot(&f1);
    let a12 = xv.dot(&f1);
    let a22 = xv.dot(&f2);
    if a11.abs() < 1e-300 || a22.abs() < 1e-300 {
        return Err(degenerate);
    }
    let tmat = [[1.0 / a11, 0.0], [-a12 / (a11 * a22), 1.0 / a22]];
    let normal_part = |x: Vec6| {
        let y = ambient.tangent_projection(&p, &x);
        let y = y.axpy(-y.dot(&f1), &f1);
        y.axpy(-y.dot(&f2), &f2)
    };
    let second = [[normal_part(jet.duu), normal_part(jet.duv)], [normal_part(jet.duv), normal_part(jet.dvv)]];
    let mut a_plane = [[Vec6::ZERO; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut s = Vec6::ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    s = s.axpy(tmat[a][i] * tmat[b][j], &second[i][j]);
                }
            }
            a_plane[a][b] = s;
        }
    }

    // e₁: the standard axis with the largest projection onto the plane
    let mut best = (0.0, 0.0, -1.0);
    for k in 0..6 {
        let (c, s) = (f1[k], f2[k]);
        let n = c * c + s * s;
        if n > best.2 * (1.0 + 1e-12) {
            best = (c, s, n);
        }
    }
    let norm = sqrt(best.2);
    let (c, s) = (best.0 / norm, best.1 / norm);
    let e1 = f1.scale(c).axpy(s, &f2);
    let e2 = f1.scale(-s).axpy(c, &f2);
    let rot = [[c, s], [-s, c]];
    let mut a_frame = [[Vec6::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Vec6::ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    acc = acc.axpy(rot[i][k] * rot[j][l], &a_plane[k][l]);
                }
            }
            a_frame[i][j] = acc;
        }
    }
    // exact symmetry
    let off = (a_frame[0][1] + a_frame[1][0]).scale(0.5);
    a_frame[0][1] = off;
    a_frame[1][0] = off;

    let (e3, e4) = normal_pair(ambient, &p, &e1, &e2);
    let mut h = [[[0.0; 2]; 2]; 2];
    let mut norm_a_sq = 0.0;
    for (a, e) in [e3, e4].iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                h[a][i][j] = a_frame[i][j].dot(e);
                norm_a_sq += h[a][i][j] * h[a][i][j];
            }
        }
    }
    let mean_curvature = e3.scale(h[0][0][0] + h[0][1][1]).axpy(h[1][0][0] + h[1][1][1], &e4);
    Ok(ShapeData {
        position: p,
        frame: [e1, e2, e3, e4],
        h,
        mean_curvature,
        norm_a_sq,
        eta_prime: ambient.eval_form(&p, ParallelForm::OmegaPrime, &e1, &e2),
        eta_double_prime: ambient.eval_form(&p, ParallelForm::OmegaDoublePrime, &e1, &e2),
    })
}

/// [`shape_data`] at every vertex, in vertex order.
pub fn shape_field(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    opts: &ShapeOptions,
) -> Result<Vec<ShapeData>, SurfaceError> {
    check_degree(opts)?;
    let mut coords = Vec::new();
    let mut offsets = Vec::new();
    (0..mesh.vertex_count()).map(|v| shape_data_with(mesh, ambient, v, opts, &mut coords, &mut offsets)).collect()
}

/// First and second derivatives of a vertex field at `v`, in the tangent
/// frame `(e₁, e₂)` of `data`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarJet {
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

impl ScalarJet {
    pub fn laplacian(&self) -> f64 {
        self.hessian[0][0] + self.hessian[1][1]
    }
}

/// Least-squares jet of a scalar vertex field over the 2-ring of `v`, in
/// coordinates projected onto the tangent plane of `data`.
pub fn scalar_jet(
    mesh: &SurfaceMesh,
    v: usize,
    data: &ShapeData,
    values: &[f64],
    opts: &ShapeOptions,
) -> Result<ScalarJet, SurfaceError> {
    check_degree(opts)?;
    let p = mesh.position(v);
    let ring = mesh.connectivity().two_ring(v);
    let mut coords = Vec::with_capacity(ring.len());
    let mut rhs = Vec::with_capacity(ring.len());
    for &q in ring {
        let d = mesh.position(q) - p;
        coords.push([d.dot(&data.frame[0]), d.dot(&data.frame[1])]);
        rhs.push([values[q] - values[v]]);
    }
    let jet = fit_jet::<1>(&coords, &rhs, opts.jet_degree).ok_or(SurfaceError::DegenerateStencil { vertex: v })?;
    Ok(ScalarJet { gradient: [jet.du[0], jet.dv[0]], hessian: [[jet.duu[0], jet.duv[0]], [jet.duv[0], jet.dvv[0]]] })
}

/// Per-vertex `|∇η − √(1−η²)(h₄₁ₖ + h₃₂ₖ) eₖ|` with `∇η` from the scalar jet
/// of the vertex values of `η`.
pub fn eta_gradient_residual(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    form: ParallelForm,
    opts: &ShapeOptions,
) -> Result<Vec<f64>, SurfaceError> {
    let field = shape_field(mesh, ambient, opts)?;
    eta_gradient_residual_from(mesh, ambient, form, &field, opts)
}

pub fn eta_gradient_residual_from(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    form: ParallelForm,
    field: &[ShapeData],
    opts: &ShapeOptions,
) -> Result<Vec<f64>, SurfaceError> {
    let eta: Vec<f64> = field.iter().map(|d| d.eta(form, ambient)).collect();
    let mut out = Vec::with_capacity(field.len());
    for (v, d) in field.iter().enumerate() {
        let jet = scalar_jet(mesh, v, d, &eta, opts)?;
        // the formula lives in the adapted frame, whose e₁, e₂ equal ours
        let formula = d.eta_gradient_formula(ambient, form);
        let dx = jet.gradient[0] - formula[0];
        let dy = jet.gradient[1] - formula[1];
        out.push(sqrt(dx * dx + dy * dy));
    }
    Ok(out)
}

pub fn area(mesh: &SurfaceMesh) -> f64 {
    mesh.area()
}

/// Smallest vertex value of `η` for `form`.
pub fn min_eta(
    mesh: &SurfaceMesh,
    ambient: &AmbientModel,
    form: ParallelForm,
    opts: &ShapeOptions,
) -> Result<f64, SurfaceError> {
    let field = shape_field(mesh, ambient, opts)?;
    Ok(field.iter().map(|d| d.eta(form, ambient)).fold(f64::INFINITY, f64::min))
}

/// A map `f: S² → S²` sampled at the vertices of a source sphere mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMap {
    source: Vec<[f64; 3]>,
    values: Vec<[f64; 3]>,
    connectivity: Arc<Connectivity>,
    r1: f64,
    r2: f64,
}

impl GraphMap {
    pub fn new(
        source: Vec<[f64; 3]>,
        values: Vec<[f64; 3]>,
        connectivity: Arc<Connectivity>,
        r1: f64,
        r2: f64,
    ) -> Result<Self, SurfaceError> {
        if source.len() != connectivity.vertex_count() || values.len() != source.len() {
            return Err(
                MeshError::VertexCountMismatch { expected: connectivity.vertex_count(), found: values.len() }.into()
            );
        }
        if connectivity.topology() != Topology::Sphere {
            return Err(MeshError::WrongTopology { expected: Topology::Sphere, found: 0 }.into());
        }
        for r in [r1, r2] {
            if !(r.is_finite() && r > 0.0) {
                return Err(AmbientError::InvalidRadius(r).into());
            }
        }
        for (i, (s, f)) in source.iter().zip(&values).enumerate() {
            if (norm3(s) - 1.0).abs() > 1e-10 || (norm3(f) - 1.0).abs() > 1e-10 {
                return Err(SurfaceError::NotUnit { vertex: i });
            }
        }
        Ok(GraphMap { source, values, connectivity, r1, r2 })
    }

    /// Samples `f` at the vertices of an icosphere of the given level.
    pub fn from_fn<F: Fn(&[f64; 3]) -> [f64; 3]>(level: u32, r1: f64, r2: f64, f: F) -> Result<Self, SurfaceError> {
        let (src, tris) = crate::mesh::icosphere(level);
        let conn = Connectivity::new(src.len(), tris, Topology::Sphere)?;
        let values = src.iter().map(&f).collect();
        Self::new(src, values, Arc::new(conn), r1, r2)
    }

    /// Reads a graph surface `(r₁x, r₂f(x))` back into a map.
    pub fn from_surface(mesh: &SurfaceMesh, r1: f64, r2: f64) -> Result<Self, SurfaceError> {
        let unit = |x: [f64; 3], v: usize| {
            let n = norm3(&x);
            if n > 0.0 {
                Ok([x[0] / n, x[1] / n, x[2] / n])
            } else {
                Err(SurfaceError::NotAGraph { vertex: v })
            }
        };
        let mut source = Vec::with_capacity(mesh.vertex_count());
        let mut values = Vec::with_capacity(mesh.vertex_count());
        for (v, p) in mesh.positions().iter().enumerate() {
            source.push(unit(p.factor(0), v)?);
            values.push(unit(p.factor(1), v)?);
        }
        Self::new(source, values, mesh.connectivity().clone(), r1, r2)
    }

    pub fn source(&self) -> &[[f64; 3]] {
        &self.source
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    pub fn connectivity(&self) -> &Arc<Connectivity> {
        &self.connectivity
    }
}

/// The graph `F(x) = (r₁x, r₂f(x))` in `S²(r₁)×S²(r₂)`, oriented by the source.
pub fn graph_immersion(map: &GraphMap) -> SurfaceMesh {
    let pos = map
        .source
        .iter()
        .zip(&map.values)
        .map(|(x, f)| {
            Vec6::from_factors(
                [map.r1 * x[0], map.r1 * x[1], map.r1 * x[2]],
                [map.r2 * f[0], map.r2 * f[1], map.r2 * f[2]],
            )
        })
        .collect();
    SurfaceMesh::with_connectivity(pos, map.connectivity.clone()).expect("graph map was validated")
}

/// Signed Jacobian of `f` at vertex `v` with respect to the round area forms,
/// from a quadratic jet of `f` over the source 2-ring.
pub fn jacobian(map: &GraphMap, v: usize) -> Result<f64, SurfaceError> {
    let x = map.source[v];
    let (t1, t2) = tangent_pair3(&x);
    let fx = map.values[v];
    let ring = map.connectivity.two_ring(v);
    let mut coords = Vec::with_capacity(ring.len());
    let mut rhs = Vec::with_capacity(ring.len());
    for &q in ring {
        let y = map.source[q];
        let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
        coords.push([dot3(&d, &t1), dot3(&d, &t2)]);
        let fy = map.values[q];
        rhs.push([fy[0] - fx[0], fy[1] - fx[1], fy[2] - fx[2]]);
    }
    let jet = fit_jet::<3>(&coords, &rhs, 2).ok_or(SurfaceError::DegenerateStencil { vertex: v })?;
    Ok(dot3(&fx, &cross3(&jet.du, &jet.dv)))
}

/// Jacobian at every vertex.
pub fn jacobians(map: &GraphMap) -> Result<Vec<f64>, SurfaceError> {
    (0..map.source.len()).map(|v| jacobian(map, v)).collect()
}

/// Orthonormal tangent pair at a unit vector `x`, with `<x, a × b> = 1`.
fn tangent_pair3(x: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut k = 0;
    for i in 1..3 {
        if x[i].abs() < x[k].abs() {
            k = i;
        }
    }
    let mut a = [0.0; 3];
    a[k] = 1.0;
    let c = dot3(&a, x);
    let a = [a[0] - c * x[0], a[1] - c * x[1], a[2] - c * x[2]];
    let n = norm3(&a);
    let a = [a[0] / n, a[1] / n, a[2] / n];
    let b = cross3(x, &a);
    (a, b)
}
