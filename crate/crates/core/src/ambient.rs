//! Ambient four-manifolds: flat ℝ⁴ and the product `S²(r₁)×S²(r₂) ⊂ ℝ³×ℝ³`.
//!
//! Points and vectors are always [`Vec6`]. ℝ⁴ sits in ℝ⁶ as `x₅ = x₆ = 0`,
//! so both models share one code path: the manifold normals of ℝ⁴ are the
//! constant axes `e₅`, `e₆`.

use crate::forms::TwoForm4;
use crate::math::{cos, cross3, dot3, norm3, sin, Vec6};
use thiserror::Error;

/// Relative tolerance used to validate that a vector is tangent to M.
pub const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmbientError {
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("projection undefined: factor {factor} of the point is zero")]
    ProjectionUndefined { factor: usize },
    #[error("vector is not tangent to M (normal component {normal:e})")]
    NotTangent { normal: f64 },
    #[error("ambient is not Einstein")]
    NotEinstein,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmbientKind {
    Euclidean4,
    ProductSpheres { r1: f64, r2: f64 },
}

/// The parallel 2-forms carried by both ambient models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParallelForm {
    /// Area form of the first factor.
    Omega1,
    /// Area form of the second factor.
    Omega2,
    /// `ω₁ + ω₂`, the Kähler form; self-dual.
    OmegaPrime,
    /// `ω₁ − ω₂`; anti-self-dual.
    OmegaDoublePrime,
}

impl ParallelForm {
    fn weights(self) -> (f64, f64) {
        match self {
            ParallelForm::Omega1 => (1.0, 0.0),
            ParallelForm::Omega2 => (0.0, 1.0),
            ParallelForm::OmegaPrime => (1.0, 1.0),
            ParallelForm::OmegaDoublePrime => (1.0, -1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientModel {
    kind: AmbientKind,
}

impl AmbientModel {
    pub fn euclidean4() -> Self {
        AmbientModel { kind: AmbientKind::Euclidean4 }
    }

    pub fn product_spheres(r1: f64, r2: f64) -> Result<Self, AmbientError> {
        for r in [r1, r2] {
            if !(r.is_finite() && r > 0.0) {
                return Err(AmbientError::InvalidRadius(r));
            }
        }
        Ok(AmbientModel { kind: AmbientKind::ProductSpheres { r1, r2 } })
    }

    pub fn kind(&self) -> AmbientKind {
        self.kind
    }

    /// Dimension of the Euclidean space M is embedded in.
    pub fn embedding_dim(&self) -> usize {
        match self.kind {
            AmbientKind::Euclidean4 => 4,
            AmbientKind::ProductSpheres { .. } => 6,
        }
    }

    pub fn radii(&self) -> Option<(f64, f64)> {
        match self.kind {
            AmbientKind::Euclidean4 => None,
            AmbientKind::ProductSpheres { r1, r2 } => Some((r1, r2)),
        }
    }

    /// Gauss curvatures of the two factors.
    pub fn factor_curvatures(&self) -> (f64, f64) {
        match self.kind {
            AmbientKind::Euclidean4 => (0.0, 0.0),
            AmbientKind::ProductSpheres { r1, r2 } => (1.0 / (r1 * r1), 1.0 / (r2 * r2)),
        }
    }

    /// Largest sectional curvature.
    pub fn max_curvature(&self) -> f64 {
        let (k1, k2) = self.factor_curvatures();
        k1.max(k2)
    }

    pub fn is_einstein(&self) -> bool {
        match self.kind {
            AmbientKind::Euclidean4 => true,
            AmbientKind::ProductSpheres { r1, r2 } => r1 == r2,
        }
    }

    /// `c` in `Ric = c g`, when the model is Einstein.
    pub fn einstein_constant(&self) -> Option<f64> {
        match self.kind {
            AmbientKind::Euclidean4 => Some(0.0),
            AmbientKind::ProductSpheres { r1, r2 } if r1 == r2 => Some(1.0 / (r1 * r1)),
            AmbientKind::ProductSpheres { .. } => None,
        }
    }

    /// Nearest point of M.
    pub fn project_to_manifold(&self, p: &Vec6) -> Result<Vec6, AmbientError> {
        match self.kind {
            AmbientKind::Euclidean4 => {
                let mut q = *p;
                q[4] = 0.0;
                q[5] = 0.0;
                Ok(q)
            }
            AmbientKind::ProductSpheres { r1, r2 } => {
                let mut out = [[0.0; 3]; 2];
                for (i, r) in [r1, r2].into_iter().enumerate() {
                    let x = p.factor(i);
                    let n = norm3(&x);
                    if !(n > 0.0) || !n.is_finite() {
                        return Err(AmbientError::ProjectionUndefined { factor: i + 1 });
                    }
                    out[i] = [x[0] * r / n, x[1] * r / n, x[2] * r / n];
                }
                Ok(Vec6::from_factors(out[0], out[1]))
            }
        }
    }

    /// Distance from `p` to M along the normal directions.
    pub fn manifold_defect(&self, p: &Vec6) -> f64 {
        match self.kind {
            AmbientKind::Euclidean4 => p[4].abs().max(p[5].abs()),
            AmbientKind::ProductSpheres { r1, r2 } => {
                (norm3(&p.factor(0)) - r1).abs().max((norm3(&p.factor(1)) - r2).abs())
            }
        }
    }

    /// Orthonormal normals of M in ℝ⁶ at `p` (outward radial directions of the
    /// sphere factors, or `e₅`, `e₆` for ℝ⁴).
    pub fn normals(&self, p: &Vec6) -> [Vec6; 2] {
        match self.kind {
            AmbientKind::Euclidean4 => [Vec6::axis(4), Vec6::axis(5)],
            AmbientKind::ProductSpheres { .. } => {
                let unit = |x: [f64; 3]| {
                    let n = norm3(&x);
                    if n > 0.0 {
                        [x[0] / n, x[1] / n, x[2] / n]
                    } else {
                        [0.0; 3]
                    }
                };
                [Vec6::from_factors(unit(p.factor(0)), [0.0; 3]), Vec6::from_factors([0.0; 3], unit(p.factor(1)))]
            }
        }
    }

    pub fn tangent_projection(&self, p: &Vec6, v: &Vec6) -> Vec6 {
        let mut out = *v;
        for n in self.normals(p) {
            out = out.axpy(-out.dot(&n), &n);
        }
        out
    }

    fn check_tangent(&self, p: &Vec6, v: &Vec6) -> Result<(), AmbientError> {
        let normal = self.normals(p).iter().map(|n| n.dot(v).abs()).fold(0.0, f64::max);
        if normal > TANGENCY_TOL * v.norm().max(1.0) {
            return Err(AmbientError::NotTangent { normal });
        }
        Ok(())
    }

    /// `K(X, Y, Z, W) = Σᵢ κᵢ (<Xᵢ,Zᵢ><Yᵢ,Wᵢ> − <Xᵢ,Wᵢ><Yᵢ,Zᵢ>)`, so that
    /// `K(X, Y, X, Y) > 0` for a plane of positive sectional curvature.
    pub fn curvature(&self, p: &Vec6, x: &Vec6, y: &Vec6, z: &Vec6, w: &Vec6) -> Result<f64, AmbientError> {
        for v in [x, y, z, w] {
            self.check_tangent(p, v)?;
        }
        Ok(self.curvature_unchecked(x, y, z, w))
    }

    fn curvature_unchecked(&self, x: &Vec6, y: &Vec6, z: &Vec6, w: &Vec6) -> f64 {
        let (k1, k2) = self.factor_curvatures();
        let mut total = 0.0;
        for (i, k) in [k1, k2].into_iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            let (xi, yi, zi, wi) = (x.factor(i), y.factor(i), z.factor(i), w.factor(i));
            total += k * (dot3(&xi, &zi) * dot3(&yi, &wi) - dot3(&xi, &wi) * dot3(&yi, &zi));
        }
        total
    }

    /// `Ric(X, Y) = Σᵢ κᵢ <Xᵢ, Yᵢ>`.
    pub fn ricci(&self, p: &Vec6, x: &Vec6, y: &Vec6) -> Result<f64, AmbientError> {
        self.check_tangent(p, x)?;
        self.check_tangent(p, y)?;
        let (k1, k2) = self.factor_curvatures();
        Ok(k1 * dot3(&x.factor(0), &y.factor(0)) + k2 * dot3(&x.factor(1), &y.factor(1)))
    }

    /// Unit normals of the two factors used to orient them (outward radial).
    fn factor_normals(&self, p: &Vec6) -> [[f64; 3]; 2] {
        let n = self.normals(p);
        [n[0].factor(0), n[1].factor(1)]
    }

    /// `ω(X, Y)` for one of the parallel forms at `p`.
    pub fn eval_form(&self, p: &Vec6, form: ParallelForm, x: &Vec6, y: &Vec6) -> f64 {
        let (a, b) = form.weights();
        match self.kind {
            AmbientKind::Euclidean4 => a * (x[0] * y[1] - x[1] * y[0]) + b * (x[2] * y[3] - x[3] * y[2]),
            AmbientKind::ProductSpheres { .. } => {
                let n = self.factor_normals(p);
                let w1 = dot3(&n[0], &cross3(&x.factor(0), &y.factor(0)));
                let w2 = dot3(&n[1], &cross3(&x.factor(1), &y.factor(1)));
                a * w1 + b * w2
            }
        }
    }

    /// The endomorphism `J` with `ω(X, Y) = <J X, Y>`.
    pub fn complex_structure(&self, p: &Vec6, form: ParallelForm, x: &Vec6) -> Vec6 {
        let (a, b) = form.weights();
        match self.kind {
            AmbientKind::Euclidean4 => Vec6::new([-a * x[1], a * x[0], -b * x[3], b * x[2], 0.0, 0.0]),
            AmbientKind::ProductSpheres { .. } => {
                let n = self.factor_normals(p);
                let j1 = cross3(&n[0], &x.factor(0));
                let j2 = cross3(&n[1], &x.factor(1));
                Vec6::from_factors([a * j1[0], a * j1[1], a * j1[2]], [b * j2[0], b * j2[1], b * j2[2]])
            }
        }
    }

    /// Components of `ω′` and `ω″` in a supplied orthonormal tangent frame.
    pub fn parallel_forms(&self, p: &Vec6, frame: &[Vec6; 4]) -> Result<(TwoForm4, TwoForm4), AmbientError> {
        for v in frame {
            self.check_tangent(p, v)?;
        }
        let build = |form: ParallelForm| {
            let mut m = [[0.0; 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    m[a][b] = self.eval_form(p, form, &frame[a], &frame[b]);
                }
            }
            TwoForm4::from_components([m[0][1], m[0][2], m[0][3], m[1][2], m[1][3], m[2][3]])
        };
        Ok((build(ParallelForm::OmegaPrime), build(ParallelForm::OmegaDoublePrime)))
    }

    /// Deterministic orthonormal tangent frame at `p`, positively oriented
    /// for `(ω′)²`; in it `ω′` has the standard Kähler components.
    pub fn tangent_frame(&self, p: &Vec6) -> [Vec6; 4] {
        match self.kind {
            AmbientKind::Euclidean4 => [Vec6::axis(0), Vec6::axis(1), Vec6::axis(2), Vec6::axis(3)],
            AmbientKind::ProductSpheres { .. } => {
                let n = self.factor_normals(p);
                let mut out = [Vec6::ZERO; 4];
                for i in 0..2 {
                    let (ta, tb) = sphere_tangent_pair(&n[i]);
                    let (ta, tb) = if i == 0 {
                        (Vec6::from_factors(ta, [0.0; 3]), Vec6::from_factors(tb, [0.0; 3]))
                    } else {
                        (Vec6::from_factors([0.0; 3], ta), Vec6::from_factors([0.0; 3], tb))
                    };
                    out[2 * i] = ta;
                    out[2 * i + 1] = tb;
                }
                out
            }
        }
    }

    /// `E = Σ Ā(eᵢ, eᵢ)`, the trace of the second fundamental form of M ⊂ ℝᴺ
    /// over a tangent orthonormal pair.
    pub fn embedding_correction(&self, p: &Vec6, e1: &Vec6, e2: &Vec6) -> Vec6 {
        match self.kind {
            AmbientKind::Euclidean4 => Vec6::ZERO,
            AmbientKind::ProductSpheres { r1, r2 } => {
                let n = self.normals(p);
                let mut e = Vec6::ZERO;
                for (i, r) in [r1, r2].into_iter().enumerate() {
                    let w = dot3(&e1.factor(i), &e1.factor(i)) + dot3(&e2.factor(i), &e2.factor(i));
                    e = e.axpy(-w / r, &n[i]);
                }
                e
            }
        }
    }

    /// Geodesic exponential map `exp_p(v)` for tangent `v`.
    pub fn exp_map(&self, p: &Vec6, v: &Vec6) -> Vec6 {
        match self.kind {
            AmbientKind::Euclidean4 => *p + *v,
            AmbientKind::ProductSpheres { r1, r2 } => {
                let a = sphere_exp(&p.factor(0), &v.factor(0), r1);
                let b = sphere_exp(&p.factor(1), &v.factor(1), r2);
                Vec6::from_factors(a, b)
            }
        }
    }
}

/// Orthonormal tangent pair `(a, b)` to the unit sphere at `n`, with
/// `<n, a × b> > 0`: the first two standard axes whose residual after removing
/// `n` exceeds 0.5, Gram–Schmidt orthonormalized.
fn sphere_tangent_pair(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut picked: [[f64; 3]; 2] = [[0.0; 3]; 2];
    let mut count = 0;
    for k in 0..3 {
        if count == 2 {
            break;
        }
        let mut v = [0.0; 3];
        v[k] = 1.0;
        let c = dot3(&v, n);
        for j in 0..3 {
            v[j] -= c * n[j];
        }
        for q in picked.iter().take(count) {
            let c = dot3(&v, q);
            for j in 0..3 {
                v[j] -= c * q[j];
            }
        }
        let len = norm3(&v);
        if len > 0.5 {
            picked[count] = [v[0] / len, v[1] / len, v[2] / len];
            count += 1;
        }
    }
    debug_assert_eq!(count, 2);
    let (a, mut b) = (picked[0], picked[1]);
    if dot3(n, &cross3(&a, &b)) < 0.0 {
        b = [-b[0], -b[1], -b[2]];
    }
    (a, b)
}

/// Exponential map of the round sphere of radius `r` centred at the origin.
pub fn sphere_exp(x: &[f64; 3], v: &[f64; 3], r: f64) -> [f64; 3] {
    let len = norm3(v);
    if len == 0.0 {
        return *x;
    }
    let theta = len / r;
    let (c, s) = (cos(theta), sin(theta));
    [c * x[0] + s * r * v[0] / len, c * x[1] + s * r * v[1] / len, c * x[2] + s * r * v[2] / len]
}
