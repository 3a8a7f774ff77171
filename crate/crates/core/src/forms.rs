//! Exact linear algebra of 2-forms on an oriented 4-dimensional inner-product
//! space: Hodge star, the self-dual/anti-self-dual splitting, normal forms
//! `λ₁ e¹∧e² + λ₂ e³∧e⁴`, comass, and adapted frames for a pair of
//! calibrating forms of opposite duality.
//!
//! Components are always taken with respect to the standard orthonormal
//! basis of ℝ⁴ unless a [`Frame4`] is named explicitly; `form.in_frame(f)`
//! re-expresses a form in another orthonormal frame.

use crate::math::{atan2, cos, det4, sin, sqrt};
use thiserror::Error;

/// Tolerance for orthonormality of a [`Frame4`].
pub const FRAME_TOL: f64 = 1e-12;
/// Tolerance on `m + mᵀ` for a [`TwoForm4`].
pub const ANTISYM_TOL: f64 = 1e-14;
/// `|η₁|` above `1 - DEGENERATE_TOL` selects the calibrated-plane branch of
/// [`adapted_basis`].
pub const DEGENERATE_TOL: f64 = 1e-8;
/// Tolerance for the comass-one and duality preconditions of [`adapted_basis`].
pub const CALIBRATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("frame is not orthonormal: |<e{i},e{j}> - δ| = {deviation:e}")]
    NotOrthonormal { i: usize, j: usize, deviation: f64 },
    #[error("matrix is not antisymmetric: |m + mᵀ| = {deviation:e}")]
    NotAntisymmetric { deviation: f64 },
    #[error("form does not have comass one (comass = {comass})")]
    NotCalibrating { comass: f64 },
    #[error("form is not self-dual (|*α - α| = {deviation:e})")]
    NotSelfDual { deviation: f64 },
    #[error("form is not anti-self-dual (|*β + β| = {deviation:e})")]
    NotAntiSelfDual { deviation: f64 },
    #[error("plane vectors are not orthonormal")]
    BadPlane,
    #[error("adapted frame came out negatively oriented")]
    OrientationMismatch,
}

/// Orientation sign of a frame relative to the standard volume element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// An orthonormal frame `e₁..e₄` of ℝ⁴.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame4 {
    vectors: [[f64; 4]; 4],
    orientation: Orientation,
}

impl Frame4 {
    pub fn new(vectors: [[f64; 4]; 4]) -> Result<Self, FormsError> {
        for i in 0..4 {
            for j in i..4 {
                let d = dot4(&vectors[i], &vectors[j]) - if i == j { 1.0 } else { 0.0 };
                if d.abs() > FRAME_TOL {
                    return Err(FormsError::NotOrthonormal { i: i + 1, j: j + 1, deviation: d.abs() });
                }
            }
        }
        let orientation = if det4(&vectors) > 0.0 { Orientation::Positive } else { Orientation::Negative };
        Ok(Frame4 { vectors, orientation })
    }

    pub fn standard() -> Self {
        let mut v = [[0.0; 4]; 4];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Frame4 { vectors: v, orientation: Orientation::Positive }
    }

    pub fn vectors(&self) -> &[[f64; 4]; 4] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> [f64; 4] {
        self.vectors[i]
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn determinant(&self) -> f64 {
        det4(&self.vectors)
    }
}

/// An antisymmetric bilinear form on ℝ⁴, stored as its component matrix
/// `m[i][j] = α(eᵢ, eⱼ)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TwoForm4 {
    m: [[f64; 4]; 4],
}

/// Index pairs `(i, j)`, `i < j`, in the order used by [`TwoForm4::components`].
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl TwoForm4 {
    pub const ZERO: TwoForm4 = TwoForm4 { m: [[0.0; 4]; 4] };

    pub fn from_matrix(m: [[f64; 4]; 4]) -> Result<Self, FormsError> {
        let mut dev: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((m[i][j] + m[j][i]).abs());
                scale = scale.max(m[i][j].abs());
            }
        }
        if dev > ANTISYM_TOL * scale {
            return Err(FormsError::NotAntisymmetric { deviation: dev });
        }
        Ok(TwoForm4 { m })
    }

    /// Builds a form from `(a₁₂, a₁₃, a₁₄, a₂₃, a₂₄, a₃₄)`.
    pub fn from_components(c: [f64; 6]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            m[i][j] = c[k];
            m[j][i] = -c[k];
        }
        TwoForm4 { m }
    }

    /// `u* ∧ v*` for covectors dual to `u`, `v`.
    pub fn wedge(u: &[f64; 4], v: &[f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = u[i] * v[j] - u[j] * v[i];
            }
        }
        TwoForm4 { m }
    }

    /// `eᵢ* ∧ eⱼ*` in the standard basis (zero-based indices).
    pub fn basis(i: usize, j: usize) -> Self {
        let mut m = [[0.0; 4]; 4];
        m[i][j] = 1.0;
        m[j][i] = -1.0;
        TwoForm4 { m }
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn components(&self) -> [f64; 6] {
        let mut c = [0.0; 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            c[k] = self.m[i][j];
        }
        c
    }

    pub fn eval(&self, u: &[f64; 4], v: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += u[i] * self.m[i][j] * v[j];
            }
        }
        s
    }

    /// Inner product making `{eᵢ*∧eⱼ*}_{i<j}` orthonormal.
    pub fn inner(&self, o: &TwoForm4) -> f64 {
        PAIRS.iter().map(|&(i, j)| self.m[i][j] * o.m[i][j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn scale(&self, s: f64) -> TwoForm4 {
        let mut m = self.m;
        for row in m.iter_mut() {
            for c in row.iter_mut() {
                *c *= s;
            }
        }
        TwoForm4 { m }
    }

    pub fn add(&self, o: &TwoForm4) -> TwoForm4 {
        let mut m = self.m;
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += o.m[i][j];
            }
        }
        TwoForm4 { m }
    }

    pub fn sub(&self, o: &TwoForm4) -> TwoForm4 {
        self.add(&o.scale(-1.0))
    }

    pub fn max_abs_diff(&self, o: &TwoForm4) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    /// Components `α(f_A, f_B)` in the frame `f`.
    pub fn in_frame(&self, frame: &Frame4) -> TwoForm4 {
        let f = frame.vectors();
        let mut m = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] = self.eval(&f[a], &f[b]);
            }
        }
        TwoForm4 { m }
    }

    /// The endomorphism `K` with `α(X, Y) = <K X, Y>`, as a matrix acting on
    /// column vectors.
    pub fn endomorphism(&self) -> [[f64; 4]; 4] {
        let mut k = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                k[j][i] = self.m[i][j];
            }
        }
        k
    }
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn mat_vec(k: &[[f64; 4]; 4], x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = dot4(&k[i], x);
    }
    y
}

fn lin(a: f64, x: &[f64; 4], b: f64, y: &[f64; 4]) -> [f64; 4] {
    [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2], a * x[3] + b * y[3]]
}

/// Hodge star with respect to the orientation of `orientation` (the metric is
/// the standard one; only the frame's orientation sign matters).
pub fn hodge_star(form: &TwoForm4, orientation: &Frame4) -> Result<TwoForm4, FormsError> {
    // revalidate: frames built by struct update elsewhere must still be orthonormal
    let frame = Frame4::new(*orientation.vectors())?;
    let [a12, a13, a14, a23, a24, a34] = form.components();
    let star = TwoForm4::from_components([a34, -a24, a23, a14, -a13, a12]);
    Ok(star.scale(frame.orientation().sign()))
}

fn hodge_star_standard(form: &TwoForm4) -> TwoForm4 {
    let [a12, a13, a14, a23, a24, a34] = form.components();
    TwoForm4::from_components([a34, -a24, a23, a14, -a13, a12])
}

/// The six forms `α₁, α₂, α₃` (self-dual) and `β₁, β₂, β₃` (anti-self-dual)
/// attached to an oriented orthonormal frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdAsdBasis {
    pub self_dual: [TwoForm4; 3],
    pub anti_self_dual: [TwoForm4; 3],
}

impl SdAsdBasis {
    pub fn all(&self) -> [TwoForm4; 6] {
        let [a1, a2, a3] = self.self_dual;
        let [b1, b2, b3] = self.anti_self_dual;
        [a1, a2, a3, b1, b2, b3]
    }
}

pub fn sd_asd_basis(frame: &Frame4) -> Result<SdAsdBasis, FormsError> {
    let frame = Frame4::new(*frame.vectors())?;
    let e = frame.vectors();
    let w = |i: usize, j: usize| TwoForm4::wedge(&e[i], &e[j]);
    let r = 1.0 / sqrt(2.0);
    let (w12, w34, w13, w24, w14, w23) = (w(0, 1), w(2, 3), w(0, 2), w(1, 3), w(0, 3), w(1, 2));
    Ok(SdAsdBasis {
        self_dual: [w12.add(&w34).scale(r), w13.sub(&w24).scale(r), w14.add(&w23).scale(r)],
        anti_self_dual: [w12.sub(&w34).scale(r), w13.add(&w24).scale(r), w14.sub(&w23).scale(r)],
    })
}

/// `Pf(α) = a₁₂a₃₄ − a₁₃a₂₄ + a₁₄a₂₃`.
pub fn pfaffian(form: &TwoForm4) -> f64 {
    let [a12, a13, a14, a23, a24, a34] = form.components();
    a12 * a34 - a13 * a24 + a14 * a23
}

/// Normal-form coefficients of a 2-form: `α = λ₁ e¹∧e² + λ₂ e³∧e⁴` in some
/// positively oriented orthonormal frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair {
    /// Always non-negative and `≥ |lambda2|`.
    pub lambda1: f64,
    /// Carries the sign of the Pfaffian.
    pub lambda2: f64,
}

pub fn eigen_pair(form: &TwoForm4) -> EigenPair {
    // s± = √2·|α±|, computed from the duality components directly so that
    // λ₁ = λ₂ stays accurate (no cancellation in |α|² ± 2 Pf)
    let [a12, a13, a14, a23, a24, a34] = form.components();
    let sp = sqrt((a12 + a34) * (a12 + a34) + (a13 - a24) * (a13 - a24) + (a14 + a23) * (a14 + a23));
    let sm = sqrt((a12 - a34) * (a12 - a34) + (a13 + a24) * (a13 + a24) + (a14 - a23) * (a14 - a23));
    EigenPair { lambda1: 0.5 * (sp + sm), lambda2: 0.5 * (sp - sm) }
}

/// `max{|λ₁|, |λ₂|}`, the maximum of the form over oriented unit 2-planes.
pub fn comass(form: &TwoForm4) -> f64 {
    let e = eigen_pair(form);
    e.lambda1.abs().max(e.lambda2.abs())
}

/// An oriented 2-plane spanned by orthonormal `u`, `v`; `area_sign` is the
/// sign of the plane's orientation form on `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedPlane {
    pub u: [f64; 4],
    pub v: [f64; 4],
    pub area_sign: f64,
}

impl OrientedPlane {
    pub fn new(u: [f64; 4], v: [f64; 4]) -> Self {
        OrientedPlane { u, v, area_sign: 1.0 }
    }

    /// The pair `(e₁, e₂)` with positive orientation.
    fn positive_pair(&self) -> Result<([f64; 4], [f64; 4]), FormsError> {
        let ok = (dot4(&self.u, &self.u) - 1.0).abs() < 1e-10
            && (dot4(&self.v, &self.v) - 1.0).abs() < 1e-10
            && dot4(&self.u, &self.v).abs() < 1e-10
            && self.area_sign != 0.0;
        if !ok {
            return Err(FormsError::BadPlane);
        }
        if self.area_sign > 0.0 {
            Ok((self.u, self.v))
        } else {
            Ok((self.u, lin(-1.0, &self.v, 0.0, &self.v)))
        }
    }
}

/// Frame from [`adapted_basis`] together with the angle data of the two forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptedBasisResult {
    pub frame: Frame4,
    pub eta1: f64,
    pub zeta1: f64,
    pub eta2: f64,
    pub zeta2: f64,
    /// True when the plane was (numerically) calibrated by `alpha` and the
    /// completion was chosen by Gram–Schmidt.
    pub degenerate: bool,
}

/// Component pattern of a self-dual calibrating form in an adapted frame.
pub fn adapted_sd_matrix(eta: f64, zeta: f64) -> [[f64; 4]; 4] {
    [[0.0, eta, zeta, 0.0], [-eta, 0.0, 0.0, -zeta], [-zeta, 0.0, 0.0, eta], [0.0, zeta, -eta, 0.0]]
}

/// Component pattern of an anti-self-dual calibrating form in an adapted frame.
pub fn adapted_asd_matrix(eta: f64, zeta: f64) -> [[f64; 4]; 4] {
    [[0.0, eta, zeta, 0.0], [-eta, 0.0, 0.0, zeta], [-zeta, 0.0, 0.0, -eta], [0.0, -zeta, eta, 0.0]]
}

fn check_calibrating(form: &TwoForm4, self_dual: bool) -> Result<(), FormsError> {
    let c = comass(form);
    if (c - 1.0).abs() > CALIBRATION_TOL {
        return Err(FormsError::NotCalibrating { comass: c });
    }
    let star = hodge_star_standard(form);
    if self_dual {
        let d = star.max_abs_diff(form);
        if d > CALIBRATION_TOL {
            return Err(FormsError::NotSelfDual { deviation: d });
        }
    } else {
        let d = star.max_abs_diff(&form.scale(-1.0));
        if d > CALIBRATION_TOL {
            return Err(FormsError::NotAntiSelfDual { deviation: d });
        }
    }
    Ok(())
}

/// Completes `e₁, e₂` to an oriented orthonormal frame by Gram–Schmidt over
/// the standard axes in order.
fn complete_frame(e1: &[f64; 4], e2: &[f64; 4]) -> [[f64; 4]; 4] {
    let mut out = [*e1, *e2, [0.0; 4], [0.0; 4]];
    let mut found = 2;
    for k in 0..4 {
        if found == 4 {
            break;
        }
        let mut v = [0.0; 4];
        v[k] = 1.0;
        for b in out.iter().take(found) {
            let c = dot4(&v, b);
            v = lin(1.0, &v, -c, b);
        }
        let n = sqrt(dot4(&v, &v));
        if n > 0.5 {
            out[found] = lin(1.0 / n, &v, 0.0, &v);
            found += 1;
        }
    }
    if found < 4 {
        // the pivot threshold above always admits two axes for a 2-plane,
        // but fall back to the largest residuals to stay total
        for k in 0..4 {
            if found == 4 {
                break;
            }
            let mut v = [0.0; 4];
            v[k] = 1.0;
            for b in out.iter().take(found) {
                let c = dot4(&v, b);
                v = lin(1.0, &v, -c, b);
            }
            let n = sqrt(dot4(&v, &v));
            if n > 1e-6 {
                out[found] = lin(1.0 / n, &v, 0.0, &v);
                found += 1;
            }
        }
    }
    if det4(&out) < 0.0 {
        out[3] = lin(-1.0, &out[3], 0.0, &out[3]);
    }
    out
}

/// Orthonormal frame `{e₁..e₄}` adapted to an oriented plane and a pair of
/// calibrating forms of opposite duality, in which both forms take the
/// canonical patterns [`adapted_sd_matrix`] and [`adapted_asd_matrix`].
///
/// Of the two in-plane rotations that diagonalize `<KL·,·>` the one with the
/// smaller angle is applied.
pub fn adapted_basis(
    plane: &OrientedPlane,
    alpha: &TwoForm4,
    beta: &TwoForm4,
) -> Result<AdaptedBasisResult, FormsError> {
    check_calibrating(alpha, true)?;
    check_calibrating(beta, false)?;
    let (mut e1, mut e2) = plane.positive_pair()?;
    let k = alpha.endomorphism();
    let l = beta.endomorphism();
    let eta1 = alpha.eval(&e1, &e2);

    let vectors = if eta1.abs() > 1.0 - DEGENERATE_TOL {
        let mut f = complete_frame(&e1, &e2);
        // rotate within span{e₃, e₄} so that β(e₁, e₄) = 0
        let b13 = beta.eval(&f[0], &f[2]);
        let b14 = beta.eval(&f[0], &f[3]);
        let r = sqrt(b13 * b13 + b14 * b14);
        if r > 0.0 {
            let (mut c, mut s) = (b13 / r, b14 / r);
            if c < 0.0 {
                c = -c;
                s = -s;
            }
            let e3 = lin(c, &f[2], s, &f[3]);
            let e4 = lin(-s, &f[2], c, &f[3]);
            f[2] = e3;
            f[3] = e4;
        }
        f
    } else {
        // diagonalize S(X, Y) = <K L X, Y> on the plane
        let kl = |x: &[f64; 4]| mat_vec(&k, &mat_vec(&l, x));
        let s11 = dot4(&kl(&e1), &e1);
        let s22 = dot4(&kl(&e2), &e2);
        let s12 = 0.5 * (dot4(&kl(&e1), &e2) + dot4(&kl(&e2), &e1));
        let theta = if s12 == 0.0 {
            0.0
        } else if s11 == s22 {
            core::f64::consts::FRAC_PI_4 * s12.signum()
        } else {
            let t = 0.5 * atan2(2.0 * s12, s11 - s22);
            // reduce to the smallest-angle solution in (-π/4, π/4]
            let q = core::f64::consts::FRAC_PI_2;
            if t > q / 2.0 {
                t - q
            } else if t <= -q / 2.0 {
                t + q
            } else {
                t
            }
        };
        let (c, s) = (cos(theta), sin(theta));
        let r1 = lin(c, &e1, s, &e2);
        let r2 = lin(-s, &e1, c, &e2);
        e1 = r1;
        e2 = r2;
        let z = sqrt(1.0 - eta1 * eta1);
        let ke1 = mat_vec(&k, &e1);
        let ke2 = mat_vec(&k, &e2);
        let e3 = lin(1.0 / z, &ke1, -eta1 / z, &e2);
        let e4 = lin(-1.0 / z, &ke2, -eta1 / z, &e1);
        [e1, e2, e3, e4]
    };

    let frame = Frame4::new(vectors)?;
    if frame.orientation() != Orientation::Positive {
        return Err(FormsError::OrientationMismatch);
    }
    let a = alpha.in_frame(&frame);
    let b = beta.in_frame(&frame);
    Ok(AdaptedBasisResult {
        frame,
        eta1: a.get(0, 1),
        zeta1: a.get(0, 2),
        eta2: b.get(0, 1),
        zeta2: b.get(0, 2),
        degenerate: eta1.abs() > 1.0 - DEGENERATE_TOL,
    })
}

/// The standard Kähler form `dx¹∧dy¹ + dx²∧dy²` on ℝ⁴ = (x¹, y¹, x², y²).
pub fn standard_kahler() -> TwoForm4 {
    TwoForm4::from_components([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}

/// `dx¹∧dy¹ − dx²∧dy²`, anti-self-dual and calibrating.
pub fn standard_anti_kahler() -> TwoForm4 {
    TwoForm4::from_components([1.0, 0.0, 0.0, 0.0, 0.0, -1.0])
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn random_form(rng: &mut ChaCha8Rng) -> TwoForm4 {
        let mut c = [0.0; 6];
        for x in c.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        TwoForm4::from_components(c)
    }

    fn random_frame(rng: &mut ChaCha8Rng) -> Frame4 {
        // Gram–Schmidt on random vectors
        let mut vs: Vec<[f64; 4]> = Vec::new();
        while vs.len() < 4 {
            let mut v = [0.0; 4];
            for x in v.iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            for b in &vs {
                let c = dot4(&v, b);
                v = lin(1.0, &v, -c, b);
            }
            let n = sqrt(dot4(&v, &v));
            if n > 0.1 {
                vs.push(lin(1.0 / n, &v, 0.0, &v));
            }
        }
        Frame4::new([vs[0], vs[1], vs[2], vs[3]]).unwrap()
    }

    fn positive_frame(rng: &mut ChaCha8Rng) -> Frame4 {
        let f = random_frame(rng);
        if f.orientation() == Orientation::Positive {
            f
        } else {
            let mut v = *f.vectors();
            v[3] = lin(-1.0, &v[3], 0.0, &v[3]);
            Frame4::new(v).unwrap()
        }
    }

    /// Brute-force Hodge star in an arbitrary oriented frame: express the form
    /// in the frame, swap complementary components with permutation signs,
    /// and map back.
    fn star_in_frame(form: &TwoForm4, frame: &Frame4) -> TwoForm4 {
        let local = form.in_frame(frame);
        let e = frame.vectors();
        let comps = local.components();
        // *(e_i∧e_j) = sign(i,j,k,l) e_k∧e_l
        let partner = [(5, 1.0), (4, -1.0), (3, 1.0), (2, 1.0), (1, -1.0), (0, 1.0)];
        let mut out = TwoForm4::ZERO;
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let (p, s) = partner[k];
            let (a, b) = PAIRS[p];
            let _ = (i, j);
            out = out.add(&TwoForm4::wedge(&e[a], &e[b]).scale(s * comps[k]));
        }
        // the frame's own orientation is the one being used
        out
    }

    #[test]
    fn star_fixes_alpha1_and_negates_beta1() {
        let b = sd_asd_basis(&Frame4::standard()).unwrap();
        let s = Frame4::standard();
        assert!(hodge_star(&b.self_dual[0], &s).unwrap().max_abs_diff(&b.self_dual[0]) < 1e-15);
        assert!(hodge_star(&b.anti_self_dual[0], &s).unwrap().max_abs_diff(&b.anti_self_dual[0].scale(-1.0)) < 1e-15);
        // e¹∧e² = (α₁ + β₁)/√2 ↦ (α₁ − β₁)/√2 = e³∧e⁴
        let star = hodge_star(&TwoForm4::basis(0, 1), &s).unwrap();
        assert!(star.max_abs_diff(&TwoForm4::basis(2, 3)) < 1e-15);
    }

    #[test]
    fn star_rejects_non_orthonormal_frame() {
        let mut v = *Frame4::standard().vectors();
        v[0][1] = 0.1;
        let bad = Frame4 { vectors: v, orientation: Orientation::Positive };
        assert!(matches!(hodge_star(&TwoForm4::basis(0, 1), &bad), Err(FormsError::NotOrthonormal { .. })));
    }

    #[test]
    fn star_is_involution_and_orientation_flips_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f = random_frame(&mut rng);
            let a = random_form(&mut rng);
            let s = hodge_star(&a, &f).unwrap();
            assert!(hodge_star(&s, &f).unwrap().max_abs_diff(&a) < 1e-14);
            assert!(s.max_abs_diff(&star_in_frame(&a, &f)) < 1e-12);
        }
    }

    #[test]
    fn standard_alpha1_components() {
        let b = sd_asd_basis(&Frame4::standard()).unwrap();
        let r = 1.0 / sqrt(2.0);
        assert_eq!(b.self_dual[0].components(), [r, 0.0, 0.0, 0.0, 0.0, r]);
    }

    #[test]
    fn basis_gram_matrix_is_identity_and_duality_holds_in_rotated_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..50 {
            let f = if trial == 0 { Frame4::standard() } else { positive_frame(&mut rng) };
            let b = sd_asd_basis(&f).unwrap();
            let all = b.all();
            for i in 0..6 {
                for j in 0..6 {
                    let g = all[i].inner(&all[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12, "gram[{i}][{j}] = {g}");
                }
            }
            for a in &b.self_dual {
                assert!(star_in_frame(a, &f).max_abs_diff(a) < 1e-12);
            }
            for bb in &b.anti_self_dual {
                assert!(star_in_frame(bb, &f).max_abs_diff(&bb.scale(-1.0)) < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_pair_known_values() {
        let k = eigen_pair(&standard_kahler());
        assert!((k.lambda1 - 1.0).abs() < 1e-15 && (k.lambda2 - 1.0).abs() < 1e-15);
        let a = eigen_pair(&standard_anti_kahler());
        assert!((a.lambda1 - 1.0).abs() < 1e-15 && (a.lambda2 + 1.0).abs() < 1e-15);
        let z = eigen_pair(&TwoForm4::ZERO);
        assert_eq!((z.lambda1, z.lambda2), (0.0, 0.0));
        assert_eq!(comass(&TwoForm4::ZERO), 0.0);
        let b = sd_asd_basis(&Frame4::standard()).unwrap();
        assert!((comass(&b.self_dual[0]) - 1.0 / sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn eigen_pair_matches_singular_values_of_endomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_form(&mut rng);
            let k = a.endomorphism();
            let m = nalgebra::Matrix4::from_fn(|i, j| k[i][j]);
            let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let e = eigen_pair(&a);
            assert!((e.lambda1 - sv[0]).abs() < 1e-10);
            assert!((e.lambda2.abs() - sv[2]).abs() < 1e-10);
            assert!((e.lambda1 * e.lambda2 - pfaffian(&a)).abs() < 1e-12);
            assert!((pfaffian(&a).powi(2) - m.determinant()).abs() < 1e-12);
        }
    }

    #[test]
    fn pfaffian_of_calibrating_pair() {
        assert_eq!(pfaffian(&standard_kahler()), 1.0);
        assert_eq!(pfaffian(&standard_anti_kahler()), -1.0);
    }

    #[test]
    fn comass_matches_brute_force_plane_search() {
        // sampled planes u∧v, no use of the normal form
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut planes = Vec::new();
        for _ in 0..20000 {
            let f = random_frame(&mut rng);
            planes.push((f.vector(0), f.vector(1)));
        }
        for _ in 0..20 {
            let a = random_form(&mut rng);
            let best = planes.iter().map(|(u, v)| a.eval(u, v)).fold(f64::MIN, f64::max);
            let c = comass(&a);
            assert!(best <= c + 1e-12);
            assert!(c - best < 0.05 * c.max(1.0), "comass {c} sampled {best}");
        }
    }

    #[test]
    fn adapted_basis_degenerate_for_calibrated_plane() {
        let plane = OrientedPlane::new([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]);
        let r = adapted_basis(&plane, &standard_kahler(), &standard_anti_kahler()).unwrap();
        assert!(r.degenerate);
        assert!((r.eta1 - 1.0).abs() < 1e-15 && (r.eta2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adapted_basis_matches_patterns_on_random_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let f = random_frame(&mut rng);
            let plane = OrientedPlane::new(f.vector(0), f.vector(1));
            let r = adapted_basis(&plane, &standard_kahler(), &standard_anti_kahler()).unwrap();
            let a = standard_kahler().in_frame(&r.frame);
            let b = standard_anti_kahler().in_frame(&r.frame);
            let want_a = TwoForm4::from_matrix(adapted_sd_matrix(r.eta1, r.zeta1)).unwrap();
            let want_b = TwoForm4::from_matrix(adapted_asd_matrix(r.eta2, r.zeta2)).unwrap();
            assert!(a.max_abs_diff(&want_a) < 1e-9);
            assert!(b.max_abs_diff(&want_b) < 1e-9);
            assert!((r.eta1 * r.eta1 + r.zeta1 * r.zeta1 - 1.0).abs() < 1e-10);
            assert!((r.eta2 * r.eta2 + r.zeta2 * r.zeta2 - 1.0).abs() < 1e-10);
            assert!((r.eta1 - standard_kahler().eval(&f.vector(0), &f.vector(1))).abs() < 1e-12);
            // e₁, e₂ still span the input plane with the same orientation
            let e = r.frame.vectors();
            let w_in = TwoForm4::wedge(&f.vector(0), &f.vector(1));
            assert!((w_in.eval(&e[0], &e[1]) - 1.0).abs() < 1e-10);
            // α + β has normal form (2, 0)
            let sum = eigen_pair(&standard_kahler().add(&standard_anti_kahler()));
            assert!((sum.lambda1 - 2.0).abs() < 1e-12 && sum.lambda2.abs() < 1e-12);
        }
    }

    #[test]
    fn adapted_basis_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let f = random_frame(&mut rng);
            let plane = OrientedPlane::new(f.vector(0), f.vector(1));
            let r = adapted_basis(&plane, &standard_kahler(), &standard_anti_kahler()).unwrap();
            let again = OrientedPlane::new(r.frame.vector(0), r.frame.vector(1));
            let r2 = adapted_basis(&again, &standard_kahler(), &standard_anti_kahler()).unwrap();
            assert!((r.eta1 - r2.eta1).abs() < 1e-10);
            assert!((r.eta2 - r2.eta2).abs() < 1e-10);
        }
    }

    #[test]
    fn adapted_basis_rejects_non_calibrating_input() {
        let plane = OrientedPlane::new([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]);
        let half = standard_kahler().scale(0.5);
        assert!(matches!(
            adapted_basis(&plane, &half, &standard_anti_kahler()),
            Err(FormsError::NotCalibrating { .. })
        ));
        assert!(matches!(
            adapted_basis(&plane, &standard_anti_kahler(), &standard_anti_kahler()),
            Err(FormsError::NotSelfDual { .. })
        ));
    }

    #[test]
    fn self_dual_calibrating_endomorphism_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = positive_frame(&mut rng);
            let b = sd_asd_basis(&f).unwrap();
            // random unit combination of α_i, scaled by √2 to comass one
            let mut c = [0.0; 3];
            for x in c.iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            let n = sqrt(c.iter().map(|x| x * x).sum());
            let mut a = TwoForm4::ZERO;
            for i in 0..3 {
                a = a.add(&b.self_dual[i].scale(sqrt(2.0) * c[i] / n));
            }
            assert!((comass(&a) - 1.0).abs() < 1e-12);
            let k = a.endomorphism();
            for i in 0..4 {
                for j in 0..4 {
                    let ktk: f64 = (0..4).map(|m| k[m][i] * k[m][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ktk - want).abs() < 1e-10);
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn comass_is_absolutely_homogeneous(c in proptest::array::uniform6(-2.0f64..2.0), s in -3.0f64..3.0) {
            let a = TwoForm4::from_components(c);
            proptest::prop_assert!((comass(&a.scale(s)) - s.abs() * comass(&a)).abs() < 1e-12);
        }

        #[test]
        fn eigen_pair_identities(c in proptest::array::uniform6(-2.0f64..2.0)) {
            let a = TwoForm4::from_components(c);
            let e = eigen_pair(&a);
            proptest::prop_assert!((e.lambda1 * e.lambda2 - pfaffian(&a)).abs() < 1e-10);
            proptest::prop_assert!((e.lambda1.powi(2) + e.lambda2.powi(2) - a.norm_sq()).abs() < 1e-10);
            proptest::prop_assert!(e.lambda1 >= e.lambda2.abs());
        }
    }
}
