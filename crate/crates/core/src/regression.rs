//! Truncated (generalized) functional linear regression on FPCA scores.
//!
//! The functional covariate enters through its first `P` scores, so
//! `η_i = α + Z_iᵀθ + Σ_j ĉ_{ij}·d_j` and `β̂(t) = Σ_j d_j·f̂_j(t)`.
//! Non-identity links are fitted by iteratively reweighted least squares
//! with step halving, so the deviance never increases between iterates.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::basis::EvalGrid;
use crate::error::{FdaError, Result};
use crate::fpca::{fpca, FpcaResult};
use crate::smoothing::FunctionalDataSet;

pub const IRLS_MAX_ITER: usize = 100;
pub const IRLS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl std::str::FromStr for Link {
    type Err = FdaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "gaussian" => Ok(Link::Identity),
            "log" | "poisson" => Ok(Link::Log),
            "logit" | "binomial" => Ok(Link::Logit),
            other => Err(FdaError::InvalidArgument(format!(
                "unknown link `{other}` (expected identity, log or logit)"
            ))),
        }
    }
}

impl Link {
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
            Link::Logit => 1.0 / (1.0 + (-eta).exp()),
        }
    }

    fn apply(self, mu: f64) -> f64 {
        match self {
            Link::Identity => mu,
            Link::Log => mu.ln(),
            Link::Logit => (mu / (1.0 - mu)).ln(),
        }
    }

    /// `dη/dμ`.
    fn derivative(self, mu: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => 1.0 / mu,
            Link::Logit => 1.0 / (mu * (1.0 - mu)),
        }
    }

    /// Variance function `V(μ)`.
    fn variance(self, mu: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => mu,
            Link::Logit => mu * (1.0 - mu),
        }
    }

    fn deviance(self, y: &[f64], mu: &[f64]) -> f64 {
        y.iter()
            .zip(mu)
            .map(|(&y, &m)| match self {
                Link::Identity => (y - m).powi(2),
                Link::Log => {
                    let ylog = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
                    2.0 * (ylog - (y - m))
                }
                Link::Logit => {
                    let ll = if y > 0.5 { m.ln() } else { (1.0 - m).ln() };
                    -2.0 * ll
                }
            })
            .sum()
    }

    fn check_response(self, y: &[f64]) -> Result<()> {
        let bad = match self {
            Link::Identity => y.iter().position(|v| !v.is_finite()),
            Link::Log => y.iter().position(|v| !(v.is_finite() && *v >= 0.0)),
            Link::Logit => y.iter().position(|v| *v != 0.0 && *v != 1.0),
        };
        match bad {
            None => Ok(()),
            Some(i) => Err(FdaError::InvalidArgument(format!(
                "response {} at position {i} is invalid for the {self:?} link",
                y[i]
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub alpha: f64,
    pub theta: Vec<f64>,
    /// Coefficients of `β̂` in the eigenfunction basis.
    pub d_coeffs: Vec<f64>,
    pub fpca: FpcaResult,
    pub link: Link,
    /// Residual variance for the identity link; 1 for log and logit.
    pub dispersion: f64,
    /// Standard errors in design order: intercept, `θ`, then `d`.
    pub std_errors: Vec<f64>,
    /// Fitted means `g⁻¹(η_i)` on the training data.
    pub fitted: Vec<f64>,
    pub deviance: f64,
    /// Deviance after each IRLS iterate (a single entry for the identity link).
    pub deviance_trace: Vec<f64>,
    pub iterations: usize,
}

impl RegressionFit {
    pub fn n_components(&self) -> usize {
        self.d_coeffs.len()
    }

    fn linear_predictor(&self, scores: &DMatrix<f64>, z: Option<&DMatrix<f64>>) -> Vec<f64> {
        (0..scores.nrows())
            .map(|i| {
                let mut eta = self.alpha;
                if let Some(z) = z {
                    eta += z.row(i).iter().zip(&self.theta).map(|(a, b)| a * b).sum::<f64>();
                }
                eta + scores.row(i).iter().zip(&self.d_coeffs).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

/// Functional linear model (identity link) fitted by least squares.
pub fn fit_flm(
    ds: &FunctionalDataSet,
    z: Option<&DMatrix<f64>>,
    y: &[f64],
    n_components: Option<usize>,
) -> Result<RegressionFit> {
    fit_gflm(ds, z, y, n_components, Link::Identity)
}

/// Generalized functional linear model with the given link.
pub fn fit_gflm(
    ds: &FunctionalDataSet,
    z: Option<&DMatrix<f64>>,
    y: &[f64],
    n_components: Option<usize>,
    link: Link,
) -> Result<RegressionFit> {
    let n = ds.n_curves();
    if y.len() != n {
        return Err(FdaError::DimensionMismatch {
            context: "response length vs number of curves",
            expected: n,
            found: y.len(),
        });
    }
    if let Some(z) = z {
        if z.nrows() != n {
            return Err(FdaError::DimensionMismatch {
                context: "scalar covariate rows vs number of curves",
                expected: n,
                found: z.nrows(),
            });
        }
    }
    link.check_response(y)?;
    let d = z.map_or(0, |z| z.ncols());
    let pca = fpca(ds, n_components)?;
    let p = pca.n_components();
    let columns = 1 + d + p;
    if n <= columns {
        return Err(FdaError::InvalidArgument(format!(
            "need more than {columns} curves for an intercept, {d} scalar covariates and {p} components, got {n}"
        )));
    }
    let x = design_matrix(&pca.scores, z);

    let (beta, cov_unscaled, deviance_trace, iterations) = match link {
        Link::Identity => {
            let sol = weighted_least_squares(&x, &DVector::from_column_slice(y), None)?;
            let eta = &x * &sol.beta;
            let mu: Vec<f64> = eta.iter().copied().collect();
            (sol.beta, sol.cov_unscaled, vec![link.deviance(y, &mu)], 1)
        }
        _ => irls(&x, y, link)?,
    };

    let eta = &x * &beta;
    let fitted: Vec<f64> = eta.iter().map(|&e| link.inverse(e)).collect();
    let deviance = link.deviance(y, &fitted);
    let dispersion = match link {
        Link::Identity => deviance / (n - columns) as f64,
        _ => 1.0,
    };
    let std_errors = cov_unscaled
        .diagonal()
        .iter()
        .map(|v| (v.max(0.0) * dispersion).sqrt())
        .collect();

    Ok(RegressionFit {
        alpha: beta[0],
        theta: beta.rows(1, d).iter().copied().collect(),
        d_coeffs: beta.rows(1 + d, p).iter().copied().collect(),
        fpca: pca,
        link,
        dispersion,
        std_errors,
        fitted,
        deviance,
        deviance_trace,
        iterations,
    })
}

/// `β̂` on a grid.
pub fn beta_function(fit: &RegressionFit, grid: &EvalGrid) -> Result<DVector<f64>> {
    let d = DVector::from_column_slice(&fit.d_coeffs);
    Ok(fit.fpca.eigenfunctions(grid)? * d)
}

/// Predicted means `g⁻¹(α + Zᵀθ + Σ_j c_j d_j)` for new curves, with scores
/// taken relative to the training mean.
pub fn predict(
    fit: &RegressionFit,
    new_curves: &FunctionalDataSet,
    z_new: Option<&DMatrix<f64>>,
) -> Result<Vec<f64>> {
    match (z_new, fit.theta.is_empty()) {
        (Some(_), true) => {
            return Err(FdaError::InvalidArgument(
                "model was fitted without scalar covariates".into(),
            ))
        }
        (None, false) => {
            return Err(FdaError::InvalidArgument(
                "model needs scalar covariates for prediction".into(),
            ))
        }
        (Some(z), false) => {
            if z.ncols() != fit.theta.len() || z.nrows() != new_curves.n_curves() {
                return Err(FdaError::DimensionMismatch {
                    context: "scalar covariates for prediction",
                    expected: fit.theta.len(),
                    found: z.ncols(),
                });
            }
        }
        (None, true) => {}
    }
    let scores = fit.fpca.project(new_curves)?;
    let scores = scores.columns(0, fit.n_components()).into_owned();
    Ok(fit
        .linear_predictor(&scores, z_new)
        .into_iter()
        .map(|e| fit.link.inverse(e))
        .collect())
}

fn design_matrix(scores: &DMatrix<f64>, z: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let n = scores.nrows();
    let d = z.map_or(0, |z| z.ncols());
    let p = scores.ncols();
    let mut x = DMatrix::zeros(n, 1 + d + p);
    x.column_mut(0).fill(1.0);
    if let Some(z) = z {
        x.columns_mut(1, d).copy_from(z);
    }
    x.columns_mut(1 + d, p).copy_from(scores);
    x
}

struct LsSolution {
    beta: DVector<f64>,
    /// `(XᵀWX)⁻¹`.
    cov_unscaled: DMatrix<f64>,
}

/// Weighted least squares through an SVD of the column-equilibrated,
/// row-weighted design; rank loss is reported as collinearity.
fn weighted_least_squares(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    weights: Option<&[f64]>,
) -> Result<LsSolution> {
    let (n, m) = x.shape();
    let mut xs = x.clone();
    let mut ys = y.clone();
    if let Some(w) = weights {
        for i in 0..n {
            let sw = w[i].sqrt();
            xs.row_mut(i).scale_mut(sw);
            ys[i] *= sw;
        }
    }
    let scale: Vec<f64> = (0..m)
        .map(|j| {
            let norm = xs.column(j).norm();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scale.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let svd = SVD::new(xs, true, true);
    let s = &svd.singular_values;
    let tol = s.max() * (n.max(m) as f64) * f64::EPSILON * 100.0;
    let rank = s.iter().filter(|&&v| v > tol).count();
    if rank < m {
        return Err(FdaError::Collinear { rank, columns: m });
    }
    let scaled = svd
        .solve(&ys, 0.0)
        .map_err(|e| FdaError::Numerical(e.to_string()))?;
    let beta = DVector::from_fn(m, |j, _| scaled[j] / scale[j]);
    let v_t = svd.v_t.as_ref().expect("SVD computed with V");
    let inv_s2 = s.map(|v| 1.0 / (v * v));
    let mut cov = v_t.transpose() * DMatrix::from_diagonal(&inv_s2) * v_t;
    for i in 0..m {
        for j in 0..m {
            cov[(i, j)] /= scale[i] * scale[j];
        }
    }
    Ok(LsSolution {
        beta,
        cov_unscaled: cov,
    })
}

type IrlsOutput = (DVector<f64>, DMatrix<f64>, Vec<f64>, usize);

fn irls(x: &DMatrix<f64>, y: &[f64], link: Link) -> Result<IrlsOutput> {
    let n = y.len();
    let mut mu: Vec<f64> = y
        .iter()
        .map(|&v| match link {
            Link::Log => v + 0.1,
            Link::Logit => (v + 0.5) / 2.0,
            Link::Identity => v,
        })
        .collect();
    let mut eta: Vec<f64> = mu.iter().map(|&m| link.apply(m)).collect();
    let mut beta: Option<DVector<f64>> = None;
    let mut trace: Vec<f64> = Vec::new();

    for iter in 1..=IRLS_MAX_ITER {
        let mut w = Vec::with_capacity(n);
        let mut working = DVector::zeros(n);
        for i in 0..n {
            let g = link.derivative(mu[i]);
            let wi = 1.0 / (link.variance(mu[i]) * g * g);
            if !wi.is_finite() || wi <= 0.0 {
                return Err(FdaError::NonConvergence {
                    iterations: iter,
                    deviance: trace.last().copied().unwrap_or(f64::NAN),
                });
            }
            w.push(wi);
            working[i] = eta[i] + (y[i] - mu[i]) * g;
        }
        let sol = weighted_least_squares(x, &working, Some(&w)).map_err(|e| match e {
            FdaError::Collinear { .. } if beta.is_some() => FdaError::NonConvergence {
                iterations: iter,
                deviance: trace.last().copied().unwrap_or(f64::NAN),
            },
            other => other,
        })?;

        let mut candidate = sol.beta;
        let mut cand_mu = means(x, &candidate, link);
        let mut dev = link.deviance(y, &cand_mu);
        if let (Some(prev), Some(&prev_dev)) = (&beta, trace.last()) {
            let mut halvings = 0;
            while !(dev.is_finite() && dev <= prev_dev) {
                if halvings == 50 {
                    return Err(FdaError::NonConvergence {
                        iterations: iter,
                        deviance: prev_dev,
                    });
                }
                candidate = (&candidate + prev) * 0.5;
                cand_mu = means(x, &candidate, link);
                dev = link.deviance(y, &cand_mu);
                halvings += 1;
            }
        }

        let converged = beta.as_ref().is_some_and(|prev| {
            let change = (&candidate - prev).amax();
            change <= IRLS_TOLERANCE * candidate.amax().max(1.0)
        });
        trace.push(dev);
        eta = (x * &candidate).iter().copied().collect();
        mu = cand_mu;
        beta = Some(candidate);
        if converged {
            let beta = beta.expect("set above");
            let w_final: Vec<f64> = mu
                .iter()
                .map(|&m| {
                    let g = link.derivative(m);
                    1.0 / (link.variance(m) * g * g)
                })
                .collect();
            let cov = weighted_least_squares(x, &DVector::zeros(n), Some(&w_final))
                .map(|s| s.cov_unscaled)
                .unwrap_or_else(|_| DMatrix::from_element(x.ncols(), x.ncols(), f64::NAN));
            return Ok((beta, cov, trace, iter));
        }
    }
    Err(FdaError::NonConvergence {
        iterations: IRLS_MAX_ITER,
        deviance: trace.last().copied().unwrap_or(f64::NAN),
    })
}

fn means(x: &DMatrix<f64>, beta: &DVector<f64>, link: Link) -> Vec<f64> {
    (x * beta).iter().map(|&e| link.inverse(e)).collect()
}
