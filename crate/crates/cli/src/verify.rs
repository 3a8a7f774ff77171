//! Randomized property checks of the 2-form algebra on ℝ⁴.

use crate::oracle::PlaneSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use symflow_core::forms::{
    adapted_asd_matrix, adapted_basis, adapted_sd_matrix, comass, eigen_pair, hodge_star, pfaffian, sd_asd_basis,
    standard_anti_kahler, standard_kahler, Orientation, OrientedPlane,
};
use symflow_core::{Frame4, TwoForm4};

pub const COMASS_TOL: f64 = 1e-6;
pub const EIGEN_TOL: f64 = 1e-10;
pub const ADAPTED_TOL: f64 = 1e-9;
pub const HODGE_TOL: f64 = 1e-10;
pub const ORACLE_PLANES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub batch: usize,
    /// Negate the `(3,4)` component of `ω″` before the adapted-basis checks,
    /// which must then fail.
    pub inject_sign_flip: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, batch: 200, inject_sign_flip: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub case: usize,
    pub property: &'static str,
    pub detail: String,
}

/// Largest error seen per property family.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub cases: usize,
    pub comass_error: f64,
    pub eigen_error: f64,
    pub adapted_error: f64,
    pub hodge_error: f64,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn gaussian4<R: Rng>(rng: &mut R) -> [f64; 4] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

fn unit3<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Haar-like random positively oriented orthonormal frame.
fn random_frame<R: Rng>(rng: &mut R) -> Frame4 {
    loop {
        let mut e: [[f64; 4]; 4] = std::array::from_fn(|_| gaussian4(rng));
        let mut ok = true;
        for i in 0..4 {
            for j in 0..i {
                let p = dot(&e[i], &e[j]);
                let ej = e[j];
                for (x, y) in e[i].iter_mut().zip(ej) {
                    *x -= p * y;
                }
            }
            let n = dot(&e[i], &e[i]).sqrt();
            if n < 1e-6 {
                ok = false;
                break;
            }
            e[i] = e[i].map(|x| x / n);
        }
        if !ok {
            continue;
        }
        if let Ok(f) = Frame4::new(e) {
            if f.orientation() == Orientation::Positive {
                return f;
            }
            e[3] = e[3].map(|x| -x);
            if let Ok(f) = Frame4::new(e) {
                return f;
            }
        }
    }
}

fn random_plane<R: Rng>(rng: &mut R) -> OrientedPlane {
    let f = random_frame(rng);
    OrientedPlane::new(f.vector(0), f.vector(1))
}

/// Forms of every normal-form type: generic, simple (`λ₂ = 0`) and
/// self-dual (`λ₁ = λ₂`).
fn random_form<R: Rng>(rng: &mut R, case: usize) -> TwoForm4 {
    let scale = (rng.random_range(-2.0..2.0f64)).exp();
    match case % 4 {
        1 => TwoForm4::wedge(&gaussian4(rng), &gaussian4(rng)).scale(scale),
        2 => {
            let f = random_frame(rng);
            let [a, b, c] = unit3(rng);
            let sd = sd_asd_basis(&f).expect("random frames are orthonormal").self_dual;
            sd[0].scale(a).add(&sd[1].scale(b)).add(&sd[2].scale(c)).scale(scale)
        }
        _ => TwoForm4::from_components(std::array::from_fn(|_| rng.sample(StandardNormal))).scale(scale),
    }
}

/// `√2 Σ cₖ Bₖ` for a unit `c`: a calibrating form of the given duality.
fn random_calibrating<R: Rng>(rng: &mut R, self_dual: bool) -> TwoForm4 {
    let basis = sd_asd_basis(&Frame4::standard()).expect("standard frame");
    let b = if self_dual { basis.self_dual } else { basis.anti_self_dual };
    let [x, y, z] = unit3(rng);
    b[0].scale(x).add(&b[1].scale(y)).add(&b[2].scale(z)).scale(std::f64::consts::SQRT_2)
}

fn matrix_diff(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

struct Checker {
    report: VerifyReport,
}

impl Checker {
    fn check(&mut self, case: usize, property: &'static str, error: f64, tol: f64) -> f64 {
        if !(error <= tol) {
            self.report.failures.push(Failure { case, property, detail: format!("error {error:e} exceeds {tol:e}") });
        }
        error
    }

    fn fail(&mut self, case: usize, property: &'static str, detail: String) {
        self.report.failures.push(Failure { case, property, detail });
    }

    fn adapted(&mut self, case: usize, plane: &OrientedPlane, alpha: &TwoForm4, beta: &TwoForm4) {
        match adapted_basis(plane, alpha, beta) {
            Err(e) => self.fail(case, "adapted_basis", e.to_string()),
            Ok(res) => {
                let a = alpha.in_frame(&res.frame);
                let b = beta.in_frame(&res.frame);
                let unit = |x: f64, y: f64| (x * x + y * y - 1.0).abs();
                let err = matrix_diff(a.matrix(), &adapted_sd_matrix(res.eta1, res.zeta1))
                    .max(matrix_diff(b.matrix(), &adapted_asd_matrix(res.eta2, res.zeta2)))
                    .max(unit(res.eta1, res.zeta1))
                    .max(unit(res.eta2, res.zeta2))
                    .max((res.eta1 - alpha.eval(&plane.u, &plane.v)).abs())
                    .max((res.eta2 - beta.eval(&plane.u, &plane.v)).abs());
                let e = self.check(case, "adapted_basis", err, ADAPTED_TOL);
                self.report.adapted_error = self.report.adapted_error.max(e);
                // e₁ and e₂ must still span the original plane
                let span = [plane.u, plane.v];
                let outside = (0..2)
                    .map(|k| {
                        let x = res.frame.vector(k);
                        let proj = span.iter().map(|s| dot(&x, s).powi(2)).sum::<f64>();
                        (1.0 - proj).abs()
                    })
                    .fold(0.0, f64::max);
                let e = self.check(case, "adapted_basis_plane", outside, ADAPTED_TOL);
                self.report.adapted_error = self.report.adapted_error.max(e);
                // α + β has normal form (2, 0): it calibrates a single plane
                let sum = eigen_pair(&alpha.add(beta));
                let err = (sum.lambda1 - 2.0).abs().max(sum.lambda2.abs());
                let e = self.check(case, "sum_eigen_pair", err, ADAPTED_TOL);
                self.report.adapted_error = self.report.adapted_error.max(e);
            }
        }
    }
}

pub fn verify_forms(opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checker = Checker { report: VerifyReport { cases: opts.batch, ..VerifyReport::default() } };
    if opts.batch == 0 {
        return checker.report;
    }
    let sample = PlaneSample::new(&mut rng, ORACLE_PLANES);
    let mut omega2 = standard_anti_kahler();
    if opts.inject_sign_flip {
        let mut c = omega2.components();
        c[5] = -c[5];
        omega2 = TwoForm4::from_components(c);
    }
    let omega1 = standard_kahler();
    for case in 0..opts.batch {
        let form = random_form(&mut rng, case);
        let size = form.norm_sq().sqrt().max(1.0);

        let oracle = sample.max_value(&form);
        let e = checker.check(case, "comass_oracle", (comass(&form) - oracle).abs() / size, COMASS_TOL);
        checker.report.comass_error = checker.report.comass_error.max(e);

        let ep = eigen_pair(&form);
        let sq = size * size;
        let err = ((ep.lambda1.powi(2) + ep.lambda2.powi(2) - form.norm_sq()).abs() / sq)
            .max((ep.lambda1 * ep.lambda2 - pfaffian(&form)).abs() / sq)
            .max(((ep.lambda2.abs() - ep.lambda1) / size).max(0.0));
        let e = checker.check(case, "eigen_identities", err, EIGEN_TOL);
        checker.report.eigen_error = checker.report.eigen_error.max(e);

        let frame = random_frame(&mut rng);
        let hodge = match (hodge_star(&form, &frame), hodge_star(&form, &Frame4::standard())) {
            (Ok(star), Ok(standard)) => match hodge_star(&star, &frame) {
                Ok(twice) => Some(twice.max_abs_diff(&form).max(star.max_abs_diff(&standard)) / size),
                Err(_) => None,
            },
            _ => None,
        };
        match hodge {
            Some(err) => {
                let basis = sd_asd_basis(&frame).expect("random frames are orthonormal");
                let mut duality: f64 = 0.0;
                for (b, sign) in
                    basis.self_dual.iter().map(|b| (b, 1.0)).chain(basis.anti_self_dual.iter().map(|b| (b, -1.0)))
                {
                    let s = hodge_star(b, &frame).expect("orthonormal frame");
                    duality = duality.max(s.max_abs_diff(&b.scale(sign)));
                }
                let e = checker.check(case, "hodge", err.max(duality), HODGE_TOL);
                checker.report.hodge_error = checker.report.hodge_error.max(e);
            }
            None => checker.fail(case, "hodge", "Hodge star rejected an orthonormal frame".into()),
        }

        let plane = random_plane(&mut rng);
        checker.adapted(case, &plane, &omega1, &omega2);
        let (alpha, beta) = (random_calibrating(&mut rng, true), random_calibrating(&mut rng, false));
        let plane = random_plane(&mut rng);
        checker.adapted(case, &plane, &alpha, &beta);
    }
    // planes calibrated by ω′, where the completion is not determined by ω′
    for case in 0..opts.batch.min(8) {
        let theta = case as f64 * 0.7;
        let (c, s) = (theta.cos(), theta.sin());
        let plane = OrientedPlane::new([c, s, 0.0, 0.0], [-s, c, 0.0, 0.0]);
        checker.adapted(opts.batch + case, &plane, &omega1, &omega2);
    }
    checker.report
}
