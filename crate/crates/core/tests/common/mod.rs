#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symflow_core::ambient::{sphere_exp, AmbientModel};
use symflow_core::mesh::SurfaceMesh;
use symflow_core::surface::{graph_immersion, GraphMap};

pub const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

pub fn unit_product() -> AmbientModel {
    AmbientModel::product_spheres(1.0, 1.0).unwrap()
}

/// `f(x) = exp_q(ε (x₁, x₂, 0))` with `q` the north pole.
pub fn contraction_map(level: u32, eps: f64) -> GraphMap {
    GraphMap::from_fn(level, 1.0, 1.0, |x| sphere_exp(&NORTH, &[eps * x[0], eps * x[1], 0.0], 1.0)).unwrap()
}

pub fn contraction_graph(level: u32, eps: f64) -> SurfaceMesh {
    graph_immersion(&contraction_map(level, eps))
}

/// `f(x) = exp_q(M x)` for a seeded random 2×3 matrix `M` with entries in
/// `[-scale, scale]`, written into the tangent plane at `q`.
pub fn random_linear_map(level: u32, scale: f64, seed: u64) -> GraphMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: [[f64; 3]; 2] = core::array::from_fn(|_| core::array::from_fn(|_| rng.random_range(-scale..scale)));
    GraphMap::from_fn(level, 1.0, 1.0, move |x| {
        let v =
            [m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2], m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2], 0.0];
        sphere_exp(&NORTH, &v, 1.0)
    })
    .unwrap()
}

pub fn constant_map(level: u32, p: [f64; 3]) -> GraphMap {
    GraphMap::from_fn(level, 1.0, 1.0, move |_| p).unwrap()
}

pub fn identity_map(level: u32) -> GraphMap {
    GraphMap::from_fn(level, 1.0, 1.0, |x| *x).unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}
