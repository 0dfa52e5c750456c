//! Functional data analysis on basis-expanded curves.
//!
//! Raw discrete observations are smoothed into coefficient vectors on a
//! Fourier or B-spline basis ([`smoothing`]). On top of that representation
//! the crate provides mean and covariance estimation ([`moments`]),
//! functional PCA ([`fpca`]), truncated functional linear and generalized
//! linear regression ([`regression`]), L² K-means with silhouette model
//! selection ([`clustering`]) and a simplified spatial scan for curves
//! ([`scan`]). [`simulate`] draws curves from a Karhunen–Loève model and
//! [`io`] reads and writes the text formats used by the command line tool.

pub mod basis;
pub mod clustering;
pub mod error;
pub mod fpca;
pub mod io;
pub mod moments;
pub mod regression;
pub mod scan;
pub mod simulate;
pub mod smoothing;

pub use basis::{gram_sqrt, BasisKind, BasisSystem, Domain, EvalGrid};
pub use clustering::{adjusted_rand_index, fkmeans, select_g, silhouette_score, ClusterResult, GSelection};
pub use error::{ErrorClass, FdaError, Result};
pub use fpca::{explained_variance, fpca, reconstruct, FpcaResult};
pub use moments::{apply_cov_operator, center, covariance_on_grid, mean_function, CenteredDataSet, MeanFunction};
pub use regression::{beta_function, fit_flm, fit_gflm, predict, Link, RegressionFit};
pub use scan::{detect_cluster, enumerate_windows, window_statistic, ScanResult, SpatialFunctionalDataSet, Window};
pub use simulate::{simulate, KlSpec};
pub use smoothing::{build_dataset, eval_curves, fit_coefficients, FunctionalDataSet, RawCurve};
