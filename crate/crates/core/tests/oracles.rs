use std::f64::consts::PI;

use nnscale::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ramp density written from its ReLU form.
fn phi_relu(x: f64) -> f64 {
    let relu = |t: f64| t.max(0.0);
    0.5 * (relu(x + 1.5) - relu(x + 0.5) - relu(x - 0.5) + relu(x - 1.5))
}

/// Operator on the unit square with every node in the sum.
fn full_sum(f: impl Fn(f64, f64) -> f64, phi: impl Fn(f64) -> f64, n: usize, x: [f64; 2]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for k1 in 0..=n {
        for k2 in 0..=n {
            let w = phi(n as f64 * x[0] - k1 as f64) * phi(n as f64 * x[1] - k2 as f64);
            num += w * f(k1 as f64 / n as f64, k2 as f64 / n as f64);
            den += w;
        }
    }
    num / den
}

#[test]
fn operator_matches_brute_force_sum() {
    let f = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let field = FnField::new(Domain::unit(2), |x: &[f64]| f(x[0], x[1]));
    let logistic_phi = |x: f64| {
        let s = |t: f64| 1.0 / (1.0 + (-t).exp());
        0.5 * (s(x + 1.0) - s(x - 1.0))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [3, 8, 17] {
        let samples = sample(&field, n).unwrap();
        for _ in 0..20 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let ramp = evaluate(&samples, &SigmoidalKernel::ramp(), &x).unwrap();
            assert!((ramp - full_sum(f, phi_relu, n, x)).abs() < 1e-12);
            let logi = evaluate(&samples, &SigmoidalKernel::logistic(), &x).unwrap();
            assert!((logi - full_sum(f, logistic_phi, n, x)).abs() < 1e-7);
        }
    }
}

#[test]
fn ramp_reproduces_affine_functions_away_from_the_boundary() {
    let field = FnField::new(Domain::unit(2), |x: &[f64]| 2.0 * x[0] - 3.0 * x[1] + 1.0);
    let n = 10;
    let samples = sample(&field, n).unwrap();
    let margin = 1.5 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let x = [rng.gen_range(margin..1.0 - margin), rng.gen_range(margin..1.0 - margin)];
        let v = evaluate(&samples, &SigmoidalKernel::ramp(), &x).unwrap();
        assert!((v - (2.0 * x[0] - 3.0 * x[1] + 1.0)).abs() < 1e-12);
    }
    // near the edge the one-sided node set biases the result
    let edge = evaluate(&samples, &SigmoidalKernel::ramp(), &[0.01, 0.5]).unwrap();
    assert!((edge - (0.02 - 1.5 + 1.0)).abs() > 1e-3);
}

#[test]
fn lp_error_survives_quadrature_refinement() {
    let f = FnField::new(Domain::unit(2), |x: &[f64]| x[0].sin());
    let samples = sample(&f, 32).unwrap();
    let g = NnApproximation::new(&samples, SigmoidalKernel::ramp());
    for p in [1.0, 2.0] {
        let coarse = lp_error(&f, &g, p, &[256, 256]).unwrap();
        let fine = lp_error(&f, &g, p, &[512, 512]).unwrap();
        assert!(
            coarse > 0.0 && ((coarse - fine) / fine).abs() < 0.02,
            "p={p}: {coarse} vs {fine}"
        );
    }
}

#[test]
fn image_model_dissimilarity_decays() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let img = ImageRaster::from_fn(32, 32, |_, _| rng.gen());
    let c = SsimConstants::default();
    let study = dissimilarity_study(&img, &SigmoidalKernel::ramp(), &[2, 4, 8, 16, 32], 16, c.c1, c.c2).unwrap();
    let slope = study.fitted_slope;
    println!("random 32x32 ramp dissimilarity {:?}, slope {slope}", study.errors);
    assert!(slope < 0.0);
    assert!(study.errors.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn study_csv_reparses() {
    let f = FnField::new(Domain::unit(2), |x: &[f64]| (3.0 * x[0]).cos() + x[1] * x[1]);
    let study = convergence_study(&f, &SigmoidalKernel::logistic(), &[4, 8, 16], 1.0, &[64, 64]).unwrap();
    let csv = study.to_csv("error");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,error"));
    for ((line, &n), &e) in lines.zip(&study.n_values).zip(&study.errors) {
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a.parse::<usize>().unwrap(), n);
        assert!((b.parse::<f64>().unwrap() - e).abs() <= 5e-9 * e);
    }
    assert!(!csv.contains('\r'));
}

#[test]
fn envelope_gap_tracks_tau() {
    // ‖P_f − f‖₁ against τ(f, n^{-1/4})₁ for a step field, over the n-range
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let vals: Vec<f64> = (0..64).map(|_| rng.gen()).collect();
    let f = FnField::new(Domain::unit(2), move |x: &[f64]| {
        vals[((x[0] * 8.0) as usize).min(7) * 8 + ((x[1] * 8.0) as usize).min(7)]
    });
    let grid = analysis::GridField::from_field(&f, &[400, 400]).unwrap();
    let mut constants = Vec::new();
    for n in [16, 81, 256, 625] {
        let env = envelopes(&grid, n).unwrap();
        let gap = lp_norm(&env.upper.zip_with(&grid, |p, v| p - v).unwrap(), 1.0).unwrap();
        constants.push(gap / tau_modulus(&grid, (n as f64).powf(-0.25), 1.0).unwrap());
    }
    println!("envelope gap / tau: {constants:?}");
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 3.0, "{constants:?}");
}
