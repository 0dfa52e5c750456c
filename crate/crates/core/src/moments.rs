//! Empirical mean and covariance of a curve sample in coefficient space.
//!
//! All estimators use the `1/n` divisor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, EvalGrid};
use crate::error::{FdaError, Result};
use crate::smoothing::FunctionalDataSet;

/// `μ̂(t) = φ(t)·ā`, with `ā` the mean coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFunction {
    pub basis: BasisSystem,
    pub coefficients: DVector<f64>,
}

impl MeanFunction {
    pub fn eval(&self, grid: &EvalGrid) -> Result<DVector<f64>> {
        Ok(self.basis.evaluate(grid)? * &self.coefficients)
    }
}

/// Centered coefficient matrix `A` (row `i` is `a_i − ā`) with its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredDataSet {
    pub basis: BasisSystem,
    pub centered: DMatrix<f64>,
    pub mean: MeanFunction,
}

impl CenteredDataSet {
    pub fn n_curves(&self) -> usize {
        self.centered.nrows()
    }

    /// `(1/n)·AᵀA`, the coefficient-space covariance.
    pub fn coefficient_covariance(&self) -> DMatrix<f64> {
        let n = self.n_curves() as f64;
        self.centered.tr_mul(&self.centered) / n
    }
}

pub fn mean_function(ds: &FunctionalDataSet) -> MeanFunction {
    let n = ds.n_curves() as f64;
    let coefficients = ds.coefficients().row_sum().transpose() / n;
    MeanFunction {
        basis: ds.basis().clone(),
        coefficients,
    }
}

pub fn center(ds: &FunctionalDataSet) -> CenteredDataSet {
    let mean = mean_function(ds);
    let mut centered = ds.coefficients().clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.coefficients.transpose();
    }
    CenteredDataSet {
        basis: ds.basis().clone(),
        centered,
        mean,
    }
}

/// `Ĉ(s_m, t_l) = (1/n)·φ(t_l)AᵀAφ(s_m)ᵀ` as a `|t_grid| × |s_grid|` matrix.
pub fn covariance_on_grid(
    cds: &CenteredDataSet,
    s_grid: &EvalGrid,
    t_grid: &EvalGrid,
) -> Result<DMatrix<f64>> {
    let phi_s = cds.basis.evaluate(s_grid)?;
    let phi_t = cds.basis.evaluate(t_grid)?;
    // Factor through the n×|grid| curve values so equal grids give an
    // exactly symmetric result.
    let xs = &cds.centered * phi_s.transpose();
    let xt = &cds.centered * phi_t.transpose();
    Ok(xt.tr_mul(&xs) / cds.n_curves() as f64)
}

/// Coefficients of `Γ̂f` for `f = φ·f_coeffs`: `(1/n)·AᵀA·W·f_coeffs`.
pub fn apply_cov_operator(
    cds: &CenteredDataSet,
    gram: &DMatrix<f64>,
    f_coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    let k = cds.basis.n_basis();
    if gram.nrows() != k || gram.ncols() != k {
        return Err(FdaError::DimensionMismatch {
            context: "Gram matrix vs basis size",
            expected: k,
            found: gram.nrows(),
        });
    }
    if f_coeffs.len() != k {
        return Err(FdaError::DimensionMismatch {
            context: "function coefficients vs basis size",
            expected: k,
            found: f_coeffs.len(),
        });
    }
    let projected = &cds.centered * (gram * f_coeffs);
    Ok(cds.centered.tr_mul(&projected) / cds.n_curves() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ds(seed: u64, n: usize, k: usize) -> FunctionalDataSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = BasisSystem::bspline(k, 4, Domain::new(0.0, 2.0).unwrap()).unwrap();
        let c = DMatrix::from_fn(n, k, |_, _| rng.random_range(-2.0..2.0));
        FunctionalDataSet::with_default_ids(basis, c).unwrap()
    }

    #[test]
    fn mean_of_copies_and_symmetric_pair() {
        let basis = BasisSystem::fourier(5, Domain::new(0.0, 1.0).unwrap()).unwrap();
        let row = [1.0, -2.0, 0.5, 3.0, 0.25];
        let copies = DMatrix::from_fn(7, 5, |_, j| row[j]);
        let m = mean_function(&FunctionalDataSet::with_default_ids(basis.clone(), copies).unwrap());
        for j in 0..5 {
            assert!((m.coefficients[j] - row[j]).abs() < 1e-15);
        }
        let pair = DMatrix::from_fn(2, 5, |i, j| if i == 0 { row[j] } else { -row[j] });
        let m = mean_function(&FunctionalDataSet::with_default_ids(basis, pair).unwrap());
        assert_eq!(m.coefficients.amax(), 0.0);
    }

    #[test]
    fn centering_examples() {
        let ds = random_ds(4, 10, 5);
        let cds = center(&ds);
        for s in cds.centered.row_sum().iter() {
            assert!(s.abs() <= 1e-10);
        }
        // Already centered input is unchanged.
        let again = center(&FunctionalDataSet::with_default_ids(ds.basis().clone(), cds.centered.clone()).unwrap());
        assert!((again.centered - &cds.centered).amax() <= 1e-12);

        let single = center(&random_ds(5, 1, 5));
        assert_eq!(single.centered.amax(), 0.0);
    }

    #[test]
    fn covariance_of_identical_curves_vanishes() {
        let basis = BasisSystem::bspline(6, 4, Domain::new(0.0, 1.0).unwrap()).unwrap();
        let copies = DMatrix::from_fn(5, 6, |_, j| j as f64 * 0.7 - 1.0);
        let cds = center(&FunctionalDataSet::with_default_ids(basis.clone(), copies).unwrap());
        let grid = EvalGrid::uniform(basis.domain(), 11).unwrap();
        assert!(covariance_on_grid(&cds, &grid, &grid).unwrap().amax() < 1e-14);
        let out = apply_cov_operator(&cds, &basis.gram_matrix(), &DVector::from_element(6, 1.0)).unwrap();
        assert!(out.amax() < 1e-14);
    }

    #[test]
    fn covariance_on_equal_grids_is_symmetric_psd() {
        let ds = random_ds(6, 30, 8);
        let cds = center(&ds);
        let grid = EvalGrid::uniform(ds.basis().domain(), 41).unwrap();
        let c = covariance_on_grid(&cds, &grid, &grid).unwrap();
        assert!((&c - c.transpose()).amax() <= 1e-12);
        let eig = SymmetricEigen::new(c.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10 * c.amax()));

        let s = EvalGrid::uniform(ds.basis().domain(), 7).unwrap();
        assert_eq!(covariance_on_grid(&cds, &s, &grid).unwrap().shape(), (41, 7));
    }

    #[test]
    fn operator_dimension_checks() {
        let ds = random_ds(7, 4, 5);
        let cds = center(&ds);
        let w = ds.basis().gram_matrix();
        assert!(apply_cov_operator(&cds, &w, &DVector::zeros(4)).is_err());
        assert!(apply_cov_operator(&cds, &DMatrix::identity(3, 3), &DVector::zeros(5)).is_err());
        assert_eq!(apply_cov_operator(&cds, &w, &DVector::zeros(5)).unwrap().amax(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn operator_symmetric_and_psd(seed in any::<u64>()) {
            let ds = random_ds(seed, 12, 7);
            let cds = center(&ds);
            let w = ds.basis().gram_matrix();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let f = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
            let g = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
            let gf = apply_cov_operator(&cds, &w, &f).unwrap();
            let gg = apply_cov_operator(&cds, &w, &g).unwrap();
            let lhs = (gf.transpose() * &w * &g)[0];
            let rhs = (f.transpose() * &w * &gg)[0];
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
            prop_assert!((f.transpose() * &w * &gf)[0] >= -1e-10);
        }

        #[test]
        fn centering_is_idempotent(seed in any::<u64>()) {
            let ds = random_ds(seed, 9, 6);
            let once = center(&ds);
            let twice = center(&FunctionalDataSet::with_default_ids(ds.basis().clone(), once.centered.clone()).unwrap());
            prop_assert!((twice.centered - once.centered).amax() <= 1e-12);
        }
    }
}
