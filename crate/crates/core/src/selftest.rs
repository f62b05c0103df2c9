//! A quick, seeded property sweep over the library, for smoke-testing a
//! build from the command line.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gain::{eigenvalues, f_radius_gradient, f_radius_optimal_gain, noise_covariance, pole_placement_gain, spectrum_distance};
use crate::group_zonotope::{GroupZonotope, Side};
use crate::harness::{run_experiment, ExperimentConfig, FilterKind};
use crate::invariant::{linearize, SystemModel};
use crate::se2::{exp_map, group_affine_residual, log_map, Se2Element, TangentVector};
use crate::zonotope::Zonotope;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn zonotope(rng: &mut ChaCha8Rng, order: usize) -> Zonotope {
    Zonotope::new(
        DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0)),
        DMatrix::from_fn(3, order, |_, _| rng.random_range(-2.0..2.0)),
    )
    .expect("three rows")
}

fn tangent(rng: &mut ChaCha8Rng) -> TangentVector {
    TangentVector::new(rng.random_range(-3.0..3.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
}

fn element(rng: &mut ChaCha8Rng) -> Se2Element {
    Se2Element::new(rng.random_range(-PI..PI), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
}

fn reduction(rng: &mut ChaCha8Rng) -> Check {
    let mut misses = 0;
    for _ in 0..20 {
        let z = zonotope(rng, 40);
        let r = z.reduce_order(30).expect("order above dimension");
        misses += (0..100)
            .filter(|_| !r.contains(&z.sample(rng), 1e-9).unwrap_or(false))
            .count();
    }
    check("reduction contains its input", misses == 0, format!("{misses} of 2000 samples outside"))
}

fn minkowski(rng: &mut ChaCha8Rng) -> Check {
    let mut misses = 0;
    for _ in 0..2000 {
        let (a, b) = (zonotope(rng, 4), zonotope(rng, 3));
        let sum = a.minkowski_sum(&b).expect("same dimension");
        if !sum.contains(&(a.sample(rng) + b.sample(rng)), 1e-9).unwrap_or(false) {
            misses += 1;
        }
    }
    check("Minkowski sum membership", misses == 0, format!("{misses} of 2000 sums outside"))
}

fn f_radius(rng: &mut ChaCha8Rng) -> Check {
    let worst = (0..200)
        .map(|_| {
            let z = zonotope(rng, 25);
            let tr = z.covariance().trace();
            (z.f_radius().powi(2) - tr).abs() / tr
        })
        .fold(0.0, f64::max);
    check("F-radius squared equals covariance trace", worst <= 1e-12, format!("worst relative error {worst:.2e}"))
}

fn exp_log(rng: &mut ChaCha8Rng) -> Check {
    let worst = (0..2000)
        .map(|_| {
            let v = tangent(rng);
            log_map(&exp_map(v)).map_or(f64::INFINITY, |w| (w.to_vector() - v.to_vector()).norm())
        })
        .fold(0.0, f64::max);
    check("log(exp(v)) = v", worst <= 1e-10, format!("worst error {worst:.2e}"))
}

fn group_affine(rng: &mut ChaCha8Rng) -> Check {
    let u = TangentVector::new(0.4, 8.0, 0.0);
    let worst = (0..1000)
        .map(|_| group_affine_residual(&element(rng), &element(rng), u, 0.01))
        .fold(0.0, f64::max);
    check("vehicle transition is group affine", worst <= 1e-12, format!("worst residual {worst:.2e}"))
}

fn group_membership(rng: &mut ChaCha8Rng) -> Check {
    let mut misses = 0;
    for _ in 0..50 {
        let h = DMatrix::from_fn(3, 6, |_, _| rng.random_range(-0.3..0.3));
        let gz = GroupZonotope::new(element(rng), h, Side::Left).expect("three rows");
        misses += (0..20)
            .filter(|_| !gz.contains_state(&gz.sample(rng), 1e-9).unwrap_or(false))
            .count();
    }
    check("group zonotope samples are members", misses == 0, format!("{misses} of 1000 samples outside"))
}

fn placement(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..50 {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.5..1.5));
        let c = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.5..1.5));
        let poles: Vec<Complex<f64>> = (0..3).map(|_| Complex::from(rng.random_range(-0.9..0.9))).collect();
        match pole_placement_gain(&a, &c, &poles) {
            Ok(l) => worst = worst.max(spectrum_distance(&eigenvalues(&(&a - &l * &c)), &poles)),
            Err(_) => failures += 1,
        }
    }
    check(
        "pole placement hits the requested spectrum",
        failures == 0 && worst <= 1e-8,
        format!("worst spectrum error {worst:.2e}, {failures} failures"),
    )
}

fn f_radius_gain(rng: &mut ChaCha8Rng) -> Check {
    let model = SystemModel::vehicle(0.01, DMatrix::identity(3, 3) * 0.1, DMatrix::identity(2, 2))
        .expect("valid model");
    let u = TangentVector::new(0.4, 8.0, 0.0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let h = DMatrix::from_fn(3, 30, |_, _| rng.random_range(-1.0..1.0));
        let lin = linearize(u, &element(rng), Side::Left, &model);
        let l = f_radius_optimal_gain(&lin.a, &lin.c, &h, &lin.measurement_map, &model.h_v);
        let q_v = noise_covariance(&lin.measurement_map, &model.h_v);
        worst = worst.max(l.map_or(f64::INFINITY, |l| f_radius_gradient(&lin.a, &lin.c, &l, &h, &q_v).amax()));
    }
    check("F-radius gain is stationary", worst <= 1e-10, format!("worst gradient entry {worst:.2e}"))
}

fn short_run() -> Check {
    let base = ExperimentConfig {
        name: "selftest".into(),
        est_init: [0.0, 5.0, 5.0],
        steps: 400,
        reps: 1,
        ..ExperimentConfig::default()
    };
    let mut detail = Vec::new();
    let mut passed = true;
    for filter in [FilterKind::Zsmf, FilterKind::Inzsmf] {
        match run_experiment(&base.with_filter(filter)) {
            Ok(r) => {
                passed &= r.mean.containment_rate >= 0.95;
                detail.push(format!("{filter} containment {:.3}", r.mean.containment_rate));
            }
            Err(e) => {
                passed = false;
                detail.push(format!("{filter} failed: {e}"));
            }
        }
    }
    check("short noisy run keeps the truth inside", passed, detail.join(", "))
}

/// Runs every check with a fixed seed.
pub fn run(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        reduction(&mut rng),
        minkowski(&mut rng),
        f_radius(&mut rng),
        exp_log(&mut rng),
        group_affine(&mut rng),
        group_membership(&mut rng),
        placement(&mut rng),
        f_radius_gain(&mut rng),
        short_run(),
    ]
}
