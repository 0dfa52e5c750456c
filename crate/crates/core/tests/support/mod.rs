//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use fdakit::{
    eval_curves, BasisSystem, Domain, EvalGrid, FunctionalDataSet, KlSpec,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn unit() -> Domain {
    Domain::new(0.0, 1.0).unwrap()
}

/// Composite trapezoid weights on a grid.
pub fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; points.len()];
    for i in 1..points.len() {
        let h = points[i] - points[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

/// Composite Simpson weights on `n` (odd) equispaced points.
pub fn simpson_weights(domain: Domain, n: usize) -> (EvalGrid, Vec<f64>) {
    assert!(n % 2 == 1);
    let grid = EvalGrid::uniform(domain, n).unwrap();
    let h = domain.width() / (n - 1) as f64;
    let w = (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (grid, w)
}

/// Weighted multivariate PCA of curves evaluated on a dense uniform grid.
/// Returns eigenvalues (descending) and absolute scores, `n × min(n, cap)`.
pub struct GridPca {
    pub eigenvalues: Vec<f64>,
    pub abs_scores: DMatrix<f64>,
}

pub fn grid_pca(ds: &FunctionalDataSet, n_points: usize) -> GridPca {
    let grid = EvalGrid::uniform(ds.basis().domain(), n_points).unwrap();
    let w = trapezoid_weights(grid.points());
    let mut x = eval_curves(ds, &grid).unwrap();
    let n = x.nrows();
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    // Dual n×n problem: (1/n)·X̃·D·X̃ᵀ shares its nonzero spectrum with the
    // weighted covariance operator.
    let mut xd = x.clone();
    for (j, mut col) in xd.column_iter_mut().enumerate() {
        col *= w[j];
    }
    let gram = (&xd * x.transpose()) / n as f64;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect();
    let abs_scores = DMatrix::from_fn(n, n, |i, c| {
        let j = order[c];
        ((n as f64) * eigenvalues[c]).sqrt() * eig.eigenvectors[(i, j)].abs()
    });
    GridPca {
        eigenvalues,
        abs_scores,
    }
}

/// Random B-spline dataset with decaying coefficient variance so the
/// spectrum is well separated.
pub fn random_bspline_ds(seed: u64, n: usize, k: usize) -> FunctionalDataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = BasisSystem::bspline(k, 4, unit()).unwrap();
    let coef = DMatrix::from_fn(n, k, |_, j| {
        let z: f64 = rng.sample(StandardNormal);
        z * (1.0 + j as f64).powf(-0.7) + 0.3 * j as f64
    });
    FunctionalDataSet::with_default_ids(basis, coef).unwrap()
}

/// Well-separated bundles of curves around random template coefficient
/// vectors. Returns the dataset and the true labels.
pub fn bundles(seed: u64, per_group: usize, groups: usize) -> (FunctionalDataSet, Vec<usize>) {
    let k = 8;
    let basis = BasisSystem::bspline(k, 4, unit()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let templates: Vec<Vec<f64>> = (0..groups)
        .map(|g| (0..k).map(|j| 6.0 * ((g * k + j) as f64 * 1.7).sin() + 4.0 * g as f64).collect())
        .collect();
    let n = per_group * groups;
    let labels: Vec<usize> = (0..n).map(|i| i / per_group).collect();
    let coef = DMatrix::from_fn(n, k, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        templates[labels[i]][j] + 0.1 * z
    });
    let ds = FunctionalDataSet::with_default_ids(basis, coef).unwrap();
    (ds, labels)
}

/// Fourier KL model on [0, 1] with eigenvalues (4, 1, 0.25).
pub fn kl_spec(n: usize, seed: u64, noise_sd: f64) -> KlSpec {
    let basis = BasisSystem::fourier(7, unit()).unwrap();
    KlSpec {
        grid: EvalGrid::uniform(basis.domain(), 41).unwrap(),
        basis,
        mean_coeffs: vec![1.0, 0.5, -0.3],
        eigenvalues: vec![4.0, 1.0, 0.25],
        n,
        noise_sd,
        seed,
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}
