//! Brute-force maximization of 2-forms over the oriented Grassmannian of
//! 2-planes in ℝ⁴, independent of the normal-form algebra in the core.

use rand::Rng;
use rand_distr::StandardNormal;
use symflow_core::forms::PAIRS;
use symflow_core::TwoForm4;

type Pair = ([f64; 4], [f64; 4]);

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram–Schmidt on `(u, v)`; `None` when they are (nearly) dependent.
fn orthonormalize(u: [f64; 4], v: [f64; 4]) -> Option<Pair> {
    let nu = dot(&u, &u).sqrt();
    if nu < 1e-12 {
        return None;
    }
    let u = u.map(|x| x / nu);
    let p = dot(&u, &v);
    let w: [f64; 4] = std::array::from_fn(|i| v[i] - p * u[i]);
    let nw = dot(&w, &w).sqrt();
    if nw < 1e-12 {
        return None;
    }
    Some((u, w.map(|x| x / nw)))
}

fn plucker(u: &[f64; 4], v: &[f64; 4]) -> [f64; 6] {
    std::array::from_fn(|k| {
        let (i, j) = PAIRS[k];
        u[i] * v[j] - u[j] * v[i]
    })
}

/// Random oriented planes with their Plücker coordinates, reusable across
/// many forms.
pub struct PlaneSample {
    planes: Vec<Pair>,
    coords: Vec<[f64; 6]>,
}

impl PlaneSample {
    pub fn new<R: Rng>(rng: &mut R, count: usize) -> Self {
        let mut planes = Vec::with_capacity(count);
        while planes.len() < count {
            let u: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            if let Some(p) = orthonormalize(u, v) {
                planes.push(p);
            }
        }
        let coords = planes.iter().map(|(u, v)| plucker(u, v)).collect();
        PlaneSample { planes, coords }
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Largest value of the form over the sample, refined by projected
    /// gradient ascent from the best sampled plane.
    pub fn max_value(&self, form: &TwoForm4) -> f64 {
        let c = form.components();
        let value = |p: &[f64; 6]| p.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, p) in self.coords.iter().enumerate() {
            let x = value(p);
            if x > best.0 {
                best = (x, i);
            }
        }
        let Some(&start) = self.planes.get(best.1) else {
            return f64::NEG_INFINITY;
        };
        polish(form, start, best.0)
    }
}

fn polish(form: &TwoForm4, start: Pair, start_value: f64) -> f64 {
    let m = form.matrix();
    let apply = |x: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| dot(&m[i], x)) };
    let eval = |(u, v): &Pair| dot(u, &apply(v));
    let (mut plane, mut current) = (start, start_value);
    let mut step = 0.1;
    for _ in 0..2000 {
        // ∂/∂u = A v, ∂/∂v = Aᵀ u = −A u
        let (u, v) = plane;
        let gu = apply(&v);
        let gv = apply(&u).map(|x| -x);
        let trial_u: [f64; 4] = std::array::from_fn(|i| u[i] + step * gu[i]);
        let trial_v: [f64; 4] = std::array::from_fn(|i| v[i] + step * gv[i]);
        match orthonormalize(trial_u, trial_v) {
            Some(trial) if eval(&trial) > current => {
                current = eval(&trial);
                plane = trial;
                step *= 1.5;
            }
            _ => {
                step *= 0.5;
                if step < 1e-15 {
                    break;
                }
            }
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finds_the_maximum_of_a_simple_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample = PlaneSample::new(&mut rng, 1000);
        let form = TwoForm4::from_components([0.0, 0.0, 0.0, 0.0, 0.0, 2.5]);
        assert!((sample.max_value(&form) - 2.5).abs() < 1e-10);
    }

    #[test]
    fn zero_form_has_zero_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sample = PlaneSample::new(&mut rng, 10);
        assert_eq!(sample.max_value(&TwoForm4::ZERO), 0.0);
    }
}
