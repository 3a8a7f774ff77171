//! Small fixed-size linear algebra shared by every module.
//!
//! Surfaces live in ℝ⁶; the flat ambient ℝ⁴ is the coordinate subspace
//! `x₅ = x₆ = 0`, so a single vector type serves both embeddings.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub(crate) fn acos(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}

/// Ambient coordinate dimension used for all point and vector storage.
pub const DIM: usize = 6;

/// A vector of the embedding space ℝ⁶.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec6(pub [f64; DIM]);

impl Vec6 {
    pub const ZERO: Vec6 = Vec6([0.0; DIM]);

    pub fn new(c: [f64; DIM]) -> Self {
        Vec6(c)
    }

    /// Unit coordinate vector `e_k`.
    pub fn axis(k: usize) -> Self {
        let mut v = Self::ZERO;
        v.0[k] = 1.0;
        v
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = Self::ZERO;
        v.0[..s.len()].copy_from_slice(s);
        v
    }

    pub fn from_factors(a: [f64; 3], b: [f64; 3]) -> Self {
        Vec6([a[0], a[1], a[2], b[0], b[1], b[2]])
    }

    pub fn factor(&self, i: usize) -> [f64; 3] {
        let o = 3 * i;
        [self.0[o], self.0[o + 1], self.0[o + 2]]
    }

    pub fn dot(&self, o: &Vec6) -> f64 {
        let mut s = 0.0;
        for k in 0..DIM {
            s += self.0[k] * o.0[k];
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.norm_sq())
    }

    pub fn scale(&self, s: f64) -> Vec6 {
        let mut v = *self;
        for c in v.0.iter_mut() {
            *c *= s;
        }
        v
    }

    /// `self + s·o`
    pub fn axpy(&self, s: f64, o: &Vec6) -> Vec6 {
        let mut v = *self;
        for k in 0..DIM {
            v.0[k] += s * o.0[k];
        }
        v
    }

    pub fn normalized(&self) -> Option<Vec6> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Index<usize> for Vec6 {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl IndexMut<usize> for Vec6 {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

impl Add for Vec6 {
    type Output = Vec6;
    fn add(self, o: Vec6) -> Vec6 {
        self.axpy(1.0, &o)
    }
}

impl Sub for Vec6 {
    type Output = Vec6;
    fn sub(self, o: Vec6) -> Vec6 {
        self.axpy(-1.0, &o)
    }
}

impl AddAssign for Vec6 {
    fn add_assign(&mut self, o: Vec6) {
        *self = *self + o;
    }
}

impl SubAssign for Vec6 {
    fn sub_assign(&mut self, o: Vec6) {
        *self = *self - o;
    }
}

impl Neg for Vec6 {
    type Output = Vec6;
    fn neg(self) -> Vec6 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vec6 {
    type Output = Vec6;
    fn mul(self, s: f64) -> Vec6 {
        self.scale(s)
    }
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    sqrt(dot3(a, a))
}

/// Solves the symmetric positive definite system `m x = rhs` in place with
/// `R` right-hand sides. Returns `None` when a pivot falls below `tol` times
/// the largest diagonal entry.
pub(crate) fn cholesky_solve<const N: usize, const R: usize>(
    m: &[[f64; N]; N],
    rhs: &mut [[f64; R]; N],
    tol: f64,
) -> Option<()> {
    let mut l = [[0.0; N]; N];
    let scale = (0..N).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    for j in 0..N {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= tol * scale {
            return None;
        }
        let d = sqrt(d);
        l[j][j] = d;
        for i in j + 1..N {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    for r in 0..R {
        for i in 0..N {
            let mut s = rhs[i][r];
            for k in 0..i {
                s -= l[i][k] * rhs[k][r];
            }
            rhs[i][r] = s / l[i][i];
        }
        for i in (0..N).rev() {
            let mut s = rhs[i][r];
            for k in i + 1..N {
                s -= l[k][i] * rhs[k][r];
            }
            rhs[i][r] = s / l[i][i];
        }
    }
    Some(())
}

/// Determinant of a 4×4 matrix by cofactor expansion.
pub(crate) fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut det = 0.0;
    for c in 0..4 {
        let mut minor = [[0.0; 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for k in 0..4 {
                if k == c {
                    continue;
                }
                minor[r - 1][cc] = m[r][k];
                cc += 1;
            }
        }
        let d3 = minor[0][0] * (minor[1][1] * minor[2][2] - minor[1][2] * minor[2][1])
            - minor[0][1] * (minor[1][0] * minor[2][2] - minor[1][2] * minor[2][0])
            + minor[0][2] * (minor[1][0] * minor[2][1] - minor[1][1] * minor[2][0]);
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][c] * d3;
    }
    det
}

/// Neumaier-compensated running sum; reductions use it so that results do
/// not depend on summation grouping beyond the fixed vertex order.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::default();
    for x in it {
        s.add(x);
    }
    s.value()
}
