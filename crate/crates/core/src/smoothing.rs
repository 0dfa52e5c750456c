//! From raw discrete observations to basis coefficients.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSystem, EvalGrid};
use crate::error::{FdaError, Result};

/// Discrete observations `x_{i,l}` of one curve at times `t_{i,l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCurve {
    pub id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl RawCurve {
    pub fn new(id: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if times.len() != values.len() {
            return Err(FdaError::Curve {
                id,
                message: format!("{} times but {} values", times.len(), values.len()),
            });
        }
        if times.is_empty() {
            return Err(FdaError::Curve {
                id,
                message: "curve has no observations".into(),
            });
        }
        Ok(RawCurve { id, times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `n` curves represented as an `n × K` coefficient matrix on a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataSet {
    basis: BasisSystem,
    coefficients: DMatrix<f64>,
    ids: Vec<String>,
}

impl FunctionalDataSet {
    pub fn new(basis: BasisSystem, coefficients: DMatrix<f64>, ids: Vec<String>) -> Result<Self> {
        if coefficients.nrows() == 0 {
            return Err(FdaError::EmptyDataset);
        }
        if coefficients.ncols() != basis.n_basis() {
            return Err(FdaError::DimensionMismatch {
                context: "coefficient columns vs basis size",
                expected: basis.n_basis(),
                found: coefficients.ncols(),
            });
        }
        if ids.len() != coefficients.nrows() {
            return Err(FdaError::DimensionMismatch {
                context: "curve ids vs coefficient rows",
                expected: coefficients.nrows(),
                found: ids.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(FdaError::DuplicateId(dup.clone()));
        }
        Ok(FunctionalDataSet {
            basis,
            coefficients,
            ids,
        })
    }

    /// Dataset with generated ids `curve_0`, `curve_1`, ….
    pub fn with_default_ids(basis: BasisSystem, coefficients: DMatrix<f64>) -> Result<Self> {
        let ids = (0..coefficients.nrows()).map(|i| format!("curve_{i}")).collect();
        Self::new(basis, coefficients, ids)
    }

    pub fn basis(&self) -> &BasisSystem {
        &self.basis
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_curves(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Subset of curves, in the order given.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let coefficients = self.coefficients.select_rows(rows);
        let ids = rows.iter().map(|&i| self.ids[i].clone()).collect();
        Self::new(self.basis.clone(), coefficients, ids)
    }
}

/// Penalized least-squares coefficients for one curve:
/// minimizes `Σ_l (x_l − φ(t_l)a)² + ridge·‖a‖²`.
///
/// Solved through an SVD of the (ridge-augmented) design matrix.
pub fn fit_coefficients(curve: &RawCurve, basis: &BasisSystem, ridge: f64) -> Result<DVector<f64>> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(FdaError::InvalidArgument(format!(
            "ridge penalty must be a nonnegative number, got {ridge}"
        )));
    }
    if curve.times.len() != curve.values.len() || curve.times.is_empty() {
        return Err(FdaError::Curve {
            id: curve.id.clone(),
            message: "times and values must be nonempty and of equal length".into(),
        });
    }
    let k = basis.n_basis();
    let l = curve.len();
    let phi = basis.design_matrix(&curve.times).map_err(|e| match e {
        FdaError::Domain { value, lo, hi } => FdaError::Curve {
            id: curve.id.clone(),
            message: format!("time {value} lies outside the basis domain [{lo}, {hi}]"),
        },
        other => other,
    })?;

    let (design, response) = if ridge > 0.0 {
        let mut design = DMatrix::zeros(l + k, k);
        design.rows_mut(0, l).copy_from(&phi);
        design
            .rows_mut(l, k)
            .copy_from(&(DMatrix::identity(k, k) * ridge.sqrt()));
        let mut response = DVector::zeros(l + k);
        response.rows_mut(0, l).copy_from_slice(&curve.values);
        (design, response)
    } else {
        (phi, DVector::from_column_slice(&curve.values))
    };

    let rank_deficient = || FdaError::RankDeficient {
        id: curve.id.clone(),
        observations: l,
        n_basis: k,
    };
    if design.nrows() < k {
        return Err(rank_deficient());
    }
    let svd = SVD::new(design, true, true);
    let s_max = svd.singular_values.max();
    let tol = s_max * (l.max(k) as f64) * f64::EPSILON * 10.0;
    if s_max == 0.0 || svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(rank_deficient());
    }
    svd.solve(&response, 0.0)
        .map_err(|e| FdaError::Numerical(e.to_string()))
}

/// Fits every curve and stacks the coefficient rows in input order.
pub fn build_dataset(
    curves: &[RawCurve],
    basis: &BasisSystem,
    ridge: f64,
) -> Result<FunctionalDataSet> {
    if curves.is_empty() {
        return Err(FdaError::EmptyDataset);
    }
    let rows: Vec<DVector<f64>> = curves
        .par_iter()
        .map(|c| fit_coefficients(c, basis, ridge))
        .collect::<Result<_>>()?;
    let k = basis.n_basis();
    let coefficients = DMatrix::from_fn(curves.len(), k, |i, j| rows[i][j]);
    let ids = curves.iter().map(|c| c.id.clone()).collect();
    FunctionalDataSet::new(basis.clone(), coefficients, ids)
}

/// Fitted curves on a grid: `n × |grid|` matrix with entry `φ(t_l)a_i`.
pub fn eval_curves(ds: &FunctionalDataSet, grid: &EvalGrid) -> Result<DMatrix<f64>> {
    let phi = ds.basis.evaluate(grid)?;
    Ok(&ds.coefficients * phi.transpose())
}
