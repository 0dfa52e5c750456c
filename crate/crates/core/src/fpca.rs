//! Functional principal component analysis through the basis representation.
//!
//! With `A` the centered coefficients and `W` the Gram matrix, the functional
//! eigenproblem `(1/n)AᵀA·W·b = λ·b` is symmetrized by `Z = A·W^{1/2}`:
//! the eigenvectors `u_j` of `(1/n)ZᵀZ` give `b_j = W^{-1/2}u_j`, and the
//! scores are `A·W·b_j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::basis::{gram_sqrt, symmetrize, BasisSystem, EvalGrid};
use crate::error::{FdaError, Result};
use crate::moments::{center, MeanFunction};
use crate::smoothing::FunctionalDataSet;

/// Cumulative explained-variance target used when no component count is given.
pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaResult {
    pub basis: BasisSystem,
    pub mean: MeanFunction,
    /// Retained eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// `K × P`; column `j` holds the coefficients of the eigenfunction `f̂_j`.
    pub eigen_coeffs: DMatrix<f64>,
    /// `n × P` score matrix.
    pub scores: DMatrix<f64>,
    /// Sum of all `min(n, K)` eigenvalues, retained or not.
    pub total_variance: f64,
    /// Every eigenvalue (`min(n, K)` of them), for component selection.
    pub all_eigenvalues: Vec<f64>,
}

impl FpcaResult {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenfunction values on a grid, `|grid| × P`.
    pub fn eigenfunctions(&self, grid: &EvalGrid) -> Result<DMatrix<f64>> {
        Ok(self.basis.evaluate(grid)? * &self.eigen_coeffs)
    }

    /// Scores `(a − ā)ᵀ·W·b_j` for arbitrary coefficient rows.
    pub fn project(&self, ds: &FunctionalDataSet) -> Result<DMatrix<f64>> {
        if ds.basis() != &self.basis {
            return Err(FdaError::BasisMismatch);
        }
        let mut centered = ds.coefficients().clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.coefficients.transpose();
        }
        let w = self.basis.gram_matrix();
        Ok(centered * (w * &self.eigen_coeffs))
    }
}

/// Runs FPCA keeping `n_components` components, or the smallest count
/// reaching 95% explained variance when `None`.
pub fn fpca(ds: &FunctionalDataSet, n_components: Option<usize>) -> Result<FpcaResult> {
    let n = ds.n_curves();
    let k = ds.basis().n_basis();
    let max_p = n.min(k);
    if let Some(p) = n_components {
        if p == 0 || p > max_p {
            return Err(FdaError::InvalidArgument(format!(
                "number of components must be in 1..={max_p}, got {p}"
            )));
        }
    }

    let cds = center(ds);
    let w = ds.basis().gram_matrix();
    let (w_sqrt, w_inv_sqrt) = gram_sqrt(&w)?;
    let z = &cds.centered * &w_sqrt;
    let cov = symmetrize(z.tr_mul(&z) / n as f64);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.truncate(max_p);

    let mut lambdas: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let top = lambdas[0].max(0.0);
    let floor = 1e-10 * top;
    for l in lambdas.iter_mut() {
        if *l < 0.0 {
            if *l < -floor && *l < -f64::MIN_POSITIVE {
                return Err(FdaError::Numerical(format!(
                    "covariance eigenvalue {l:e} is negative beyond round-off"
                )));
            }
            *l = 0.0;
        }
    }
    // Variation at the level of rounding noise in the centering step counts as none.
    let scale = cds.mean.coefficients.amax().max(ds.coefficients().amax());
    let degenerate = top <= 1e-28 * scale * scale * w.amax();
    if degenerate {
        lambdas.iter_mut().for_each(|l| *l = 0.0);
    }
    let total_variance: f64 = lambdas.iter().sum();

    let p = match n_components {
        Some(p) => p,
        None => components_for_variance(&lambdas, DEFAULT_VARIANCE_TARGET),
    };

    let mut eigen_coeffs = DMatrix::zeros(k, p);
    for (col, &j) in order.iter().take(p).enumerate() {
        let mut b = &w_inv_sqrt * eig.eigenvectors.column(j);
        canonicalize_sign(&mut b);
        eigen_coeffs.set_column(col, &b);
    }
    let scores = if degenerate {
        DMatrix::zeros(n, p)
    } else {
        &cds.centered * (&w * &eigen_coeffs)
    };

    Ok(FpcaResult {
        basis: ds.basis().clone(),
        mean: cds.mean,
        eigenvalues: lambdas[..p].to_vec(),
        eigen_coeffs,
        scores,
        total_variance,
        all_eigenvalues: lambdas,
    })
}

/// Smallest component count whose cumulative explained variance reaches
/// `target`; 1 when there is no variance at all.
pub fn components_for_variance(eigenvalues: &[f64], target: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return 1;
    }
    let mut acc = 0.0;
    for (j, l) in eigenvalues.iter().enumerate() {
        acc += l;
        if acc / total >= target - 1e-12 {
            return j + 1;
        }
    }
    eigenvalues.len()
}

/// Flips `b` so its entry of largest magnitude is positive (first such entry
/// on ties).
fn canonicalize_sign(b: &mut DVector<f64>) {
    let mut best = 0;
    for (i, v) in b.iter().enumerate() {
        if v.abs() > b[best].abs() {
            best = i;
        }
    }
    if b[best] < 0.0 {
        b.neg_mut();
    }
}

/// Share of total variance carried by each retained component.
pub fn explained_variance(r: &FpcaResult) -> Result<Vec<f64>> {
    if r.total_variance <= 0.0 {
        return Err(FdaError::ZeroVariance);
    }
    Ok(r.eigenvalues.iter().map(|l| l / r.total_variance).collect())
}

/// Truncated Karhunen–Loève reconstruction `μ̂(t) + Σ_{j≤P_use} ĉ_{ij} f̂_j(t)`.
pub fn reconstruct(r: &FpcaResult, p_use: usize, grid: &EvalGrid) -> Result<DMatrix<f64>> {
    if p_use == 0 || p_use > r.n_components() {
        return Err(FdaError::InvalidArgument(format!(
            "reconstruction order must be in 1..={}, got {p_use}",
            r.n_components()
        )));
    }
    let phi = r.basis.evaluate(grid)?;
    let mean = &phi * &r.mean.coefficients;
    let f = &phi * r.eigen_coeffs.columns(0, p_use);
    let mut out = r.scores.columns(0, p_use) * f.transpose();
    for mut row in out.row_iter_mut() {
        row += mean.transpose();
    }
    Ok(out)
}
