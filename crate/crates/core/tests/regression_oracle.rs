mod support;

use fdakit::{
    beta_function, build_dataset, eval_curves, fit_flm, fit_gflm, fpca, mean_function, predict,
    simulate, FunctionalDataSet, Link,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use support::*;

/// `∫X_i β` by composite Simpson on a dense grid.
fn integrals(ds: &FunctionalDataSet, beta_coeffs: &DVector<f64>) -> Vec<f64> {
    let (grid, w) = simpson_weights(ds.basis().domain(), 4001);
    let x = eval_curves(ds, &grid).unwrap();
    let beta = ds.basis().evaluate(&grid).unwrap() * beta_coeffs;
    (0..ds.n_curves())
        .map(|i| (0..grid.len()).map(|l| w[l] * x[(i, l)] * beta[l]).sum())
        .collect()
}

#[test]
fn truncated_model_round_trip_with_covariates() {
    let ds = random_bspline_ds(1, 60, 10);
    let r = fpca(&ds, Some(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z = DMatrix::from_fn(60, 2, |_, _| rng.random_range(-1.0..1.0));
    let d_star = [1.0, -0.5, 0.25];
    let theta = [0.7, -1.3];
    let y: Vec<f64> = (0..60)
        .map(|i| {
            2.0 + theta[0] * z[(i, 0)]
                + theta[1] * z[(i, 1)]
                + (0..3).map(|j| r.scores[(i, j)] * d_star[j]).sum::<f64>()
        })
        .collect();
    let fit = fit_flm(&ds, Some(&z), &y, Some(3)).unwrap();
    assert!((fit.alpha - 2.0).abs() < 1e-6);
    for (a, b) in fit.theta.iter().zip(&theta) {
        assert!((a - b).abs() < 1e-6);
    }
    for (a, b) in fit.d_coeffs.iter().zip(&d_star) {
        assert!((a - b).abs() < 1e-6);
    }
}

/// Noiseless `Y_i = ∫X_i β*` with `β*` in the span of the leading
/// eigenfunctions of `train`.
fn span_problem(train: &FunctionalDataSet) -> (DVector<f64>, Vec<f64>) {
    let r = fpca(train, Some(3)).unwrap();
    let d_star = DVector::from_column_slice(&[0.8, -1.5, 2.0]);
    let beta_coeffs = &r.eigen_coeffs * &d_star;
    let y = integrals(train, &beta_coeffs);
    (beta_coeffs, y)
}

#[test]
fn beta_recovered_when_in_the_eigen_span() {
    let ds = random_bspline_ds(3, 80, 12);
    let (beta_coeffs, y) = span_problem(&ds);
    let fit = fit_flm(&ds, None, &y, Some(3)).unwrap();
    let grid = fdakit::EvalGrid::uniform(ds.basis().domain(), 201).unwrap();
    let est = beta_function(&fit, &grid).unwrap();
    let truth = ds.basis().evaluate(&grid).unwrap() * &beta_coeffs;
    assert!((est - truth).amax() < 1e-4);
}

#[test]
fn held_out_predictions_match_the_functional_response() {
    let ds = random_bspline_ds(5, 100, 12);
    let train_idx: Vec<usize> = (0..50).collect();
    let test_idx: Vec<usize> = (50..100).collect();
    let train = ds.select(&train_idx).unwrap();
    let test = ds.select(&test_idx).unwrap();
    let (beta_coeffs, y) = span_problem(&train);
    let fit = fit_flm(&train, None, &y, Some(3)).unwrap();
    let pred = predict(&fit, &test, None).unwrap();
    let truth = integrals(&test, &beta_coeffs);
    for (p, t) in pred.iter().zip(&truth) {
        assert!((p - t).abs() < 1e-4, "{p} vs {t}");
    }
}

#[test]
fn truncated_fit_agrees_with_functional_form() {
    let ds = random_bspline_ds(6, 70, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y: Vec<f64> = (0..70).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let fit = fit_flm(&ds, None, &y, Some(4)).unwrap();
    let beta_coeffs = &fit.fpca.eigen_coeffs * DVector::from_column_slice(&fit.d_coeffs);
    let mean = mean_function(&ds);
    let mut centered = ds.coefficients().clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.coefficients.transpose();
    }
    let cds = FunctionalDataSet::with_default_ids(ds.basis().clone(), centered).unwrap();
    let functional = integrals(&cds, &beta_coeffs);
    for (i, f) in fit.fitted.iter().enumerate() {
        assert!((f - (fit.alpha + functional[i])).abs() < 1e-8);
    }
}

#[test]
fn poisson_coefficients_within_monte_carlo_error() {
    let spec = kl_spec(2000, 13, 0.1);
    let ds = build_dataset(&simulate(&spec).unwrap(), &spec.basis, 0.0).unwrap();
    let scores = fpca(&ds, Some(3)).unwrap().scores;
    let d_star = [0.2, -0.3, 0.4];
    let rates: Vec<f64> = (0..ds.n_curves())
        .map(|i| (0.5 + (0..3).map(|j| scores[(i, j)] * d_star[j]).sum::<f64>()).exp())
        .collect();
    let draw = |seed: u64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rates.iter().map(|&r| Poisson::new(r).unwrap().sample(&mut rng)).collect()
    };
    let estimate = |seed: u64| {
        let fit = fit_gflm(&ds, None, &draw(seed), Some(3), Link::Log).unwrap();
        assert!(fit.deviance_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        fit.d_coeffs
    };
    let reps: Vec<Vec<f64>> = (100..300).map(estimate).collect();
    let observed = estimate(1);
    for j in 0..3 {
        let col: Vec<f64> = reps.iter().map(|r| r[j]).collect();
        let (_, sd) = mean_sd(&col);
        assert!((observed[j] - d_star[j]).abs() <= 3.0 * sd, "d{j}: {} (sd {sd})", observed[j]);
    }
}
