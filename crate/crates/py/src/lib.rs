//! Python bindings: basis systems, functional datasets and the analysis
//! pipelines. Matrices cross the boundary as lists of rows.

use fdakit::{ErrorClass, FdaError};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: FdaError) -> PyErr {
    match (&e, e.class()) {
        (FdaError::Io { .. }, _) => PyOSError::new_err(e.to_string()),
        (_, ErrorClass::Numerical) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn grid(points: Vec<f64>) -> PyResult<fdakit::EvalGrid> {
    fdakit::EvalGrid::new(points).map_err(to_py)
}

#[pyclass(name = "Basis", module = "fdakit_py", skip_from_py_object)]
#[derive(Clone)]
struct Basis {
    inner: fdakit::BasisSystem,
}

#[pymethods]
impl Basis {
    #[staticmethod]
    #[pyo3(signature = (k, order = 4, lo = 0.0, hi = 1.0, knots = None))]
    fn bspline(k: usize, order: usize, lo: f64, hi: f64, knots: Option<Vec<f64>>) -> PyResult<Self> {
        let domain = fdakit::Domain::new(lo, hi).map_err(to_py)?;
        let inner = match knots {
            Some(knots) => {
                let b = fdakit::BasisSystem::bspline_with_knots(order, domain, knots).map_err(to_py)?;
                if b.n_basis() != k {
                    return Err(PyValueError::new_err(format!(
                        "{} interior knots with order {order} give {} functions, not {k}",
                        b.interior_knots().len(),
                        b.n_basis()
                    )));
                }
                b
            }
            None => fdakit::BasisSystem::bspline(k, order, domain).map_err(to_py)?,
        };
        Ok(Basis { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (k, lo = 0.0, hi = 1.0))]
    fn fourier(k: usize, lo: f64, hi: f64) -> PyResult<Self> {
        let domain = fdakit::Domain::new(lo, hi).map_err(to_py)?;
        Ok(Basis {
            inner: fdakit::BasisSystem::fourier(k, domain).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_basis(&self) -> usize {
        self.inner.n_basis()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            fdakit::BasisKind::Fourier => "fourier",
            fdakit::BasisKind::BSpline => "bspline",
        }
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        let d = self.inner.domain();
        (d.lo, d.hi)
    }

    /// Basis values, one row per point.
    fn evaluate(&self, points: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let g = grid(points)?;
        Ok(rows(&self.inner.evaluate(&g).map_err(to_py)?))
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.gram_matrix())
    }

    fn __repr__(&self) -> String {
        let d = self.inner.domain();
        format!("Basis({}, k={}, domain=[{}, {}])", self.kind(), self.n_basis(), d.lo, d.hi)
    }
}

#[pyclass(name = "Dataset", module = "fdakit_py")]
struct Dataset {
    inner: fdakit::FunctionalDataSet,
}

#[pymethods]
impl Dataset {
    /// Smooths raw curves given as `(id, times, values)` tuples.
    #[staticmethod]
    #[pyo3(signature = (curves, basis, ridge = 0.0))]
    fn from_curves(curves: Vec<(String, Vec<f64>, Vec<f64>)>, basis: PyRef<'_, Basis>, ridge: f64) -> PyResult<Self> {
        let raw = curves
            .into_iter()
            .map(|(id, t, v)| fdakit::RawCurve::new(id, t, v))
            .collect::<fdakit::Result<Vec<_>>>()
            .map_err(to_py)?;
        Ok(Dataset {
            inner: fdakit::build_dataset(&raw, &basis.inner, ridge).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (basis, coefficients, ids = None))]
    fn from_coefficients(basis: PyRef<'_, Basis>, coefficients: Vec<Vec<f64>>, ids: Option<Vec<String>>) -> PyResult<Self> {
        let c = matrix(&coefficients, "coefficients")?;
        let inner = match ids {
            Some(ids) => fdakit::FunctionalDataSet::new(basis.inner.clone(), c, ids),
            None => fdakit::FunctionalDataSet::with_default_ids(basis.inner.clone(), c),
        }
        .map_err(to_py)?;
        Ok(Dataset { inner })
    }

    /// Reads a long-format `id,t,value` CSV and smooths it.
    #[staticmethod]
    #[pyo3(signature = (path, basis, ridge = 0.0))]
    fn read_csv(path: std::path::PathBuf, basis: PyRef<'_, Basis>, ridge: f64) -> PyResult<Self> {
        let raw = fdakit::io::read_curves(&path).map_err(to_py)?;
        Ok(Dataset {
            inner: fdakit::build_dataset(&raw, &basis.inner, ridge).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_curves(&self) -> usize {
        self.inner.n_curves()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn basis(&self) -> Basis {
        Basis {
            inner: self.inner.basis().clone(),
        }
    }

    fn coefficients(&self) -> Vec<Vec<f64>> {
        rows(self.inner.coefficients())
    }

    /// Fitted curves at the given points, one row per curve.
    fn evaluate(&self, points: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let g = grid(points)?;
        Ok(rows(&fdakit::eval_curves(&self.inner, &g).map_err(to_py)?))
    }

    /// Estimated mean function at the given points.
    fn mean(&self, points: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = grid(points)?;
        let m = fdakit::mean_function(&self.inner).eval(&g).map_err(to_py)?;
        Ok(m.iter().copied().collect())
    }

    /// Covariance function, `|t_points| × |s_points|`.
    fn covariance(&self, s_points: Vec<f64>, t_points: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let s = grid(s_points)?;
        let t = grid(t_points)?;
        let c = fdakit::covariance_on_grid(&fdakit::center(&self.inner), &s, &t).map_err(to_py)?;
        Ok(rows(&c))
    }

    fn __len__(&self) -> usize {
        self.inner.n_curves()
    }
}

/// Functional PCA; keeps `p` components or the 95% variance count.
#[pyfunction]
#[pyo3(signature = (ds, p = None))]
fn fpca<'py>(py: Python<'py>, ds: PyRef<'_, Dataset>, p: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let r = fdakit::fpca(&ds.inner, p).map_err(to_py)?;
    let ratios = fdakit::explained_variance(&r).unwrap_or_else(|_| vec![0.0; r.n_components()]);
    let d = PyDict::new(py);
    d.set_item("eigenvalues", r.eigenvalues.clone())?;
    d.set_item("explained_variance", ratios)?;
    d.set_item("scores", rows(&r.scores))?;
    d.set_item("eigen_coeffs", rows(&r.eigen_coeffs.transpose()))?;
    d.set_item("mean_coeffs", r.mean.coefficients.iter().copied().collect::<Vec<_>>())?;
    d.set_item("total_variance", r.total_variance)?;
    Ok(d)
}

#[pyclass(name = "RegressionModel", module = "fdakit_py")]
struct RegressionModel {
    fit: fdakit::RegressionFit,
}

#[pymethods]
impl RegressionModel {
    #[getter]
    fn alpha(&self) -> f64 {
        self.fit.alpha
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.fit.theta.clone()
    }

    #[getter]
    fn d_coeffs(&self) -> Vec<f64> {
        self.fit.d_coeffs.clone()
    }

    #[getter]
    fn std_errors(&self) -> Vec<f64> {
        self.fit.std_errors.clone()
    }

    #[getter]
    fn fitted(&self) -> Vec<f64> {
        self.fit.fitted.clone()
    }

    #[getter]
    fn deviance_trace(&self) -> Vec<f64> {
        self.fit.deviance_trace.clone()
    }

    #[getter]
    fn dispersion(&self) -> f64 {
        self.fit.dispersion
    }

    /// Coefficient function at the given points.
    fn beta(&self, points: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = grid(points)?;
        let b = fdakit::beta_function(&self.fit, &g).map_err(to_py)?;
        Ok(b.iter().copied().collect())
    }

    #[pyo3(signature = (ds, z = None))]
    fn predict(&self, ds: PyRef<'_, Dataset>, z: Option<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
        let z = z.map(|z| matrix(&z, "z")).transpose()?;
        fdakit::predict(&self.fit, &ds.inner, z.as_ref()).map_err(to_py)
    }
}

/// Truncated functional regression of `y` on the curves (and optional scalar covariates `z`).
#[pyfunction]
#[pyo3(signature = (ds, y, z = None, p = None, link = "identity"))]
fn regress(
    ds: PyRef<'_, Dataset>,
    y: Vec<f64>,
    z: Option<Vec<Vec<f64>>>,
    p: Option<usize>,
    link: &str,
) -> PyResult<RegressionModel> {
    let link: fdakit::Link = link.parse().map_err(to_py)?;
    let z = z.map(|z| matrix(&z, "z")).transpose()?;
    let fit = fdakit::fit_gflm(&ds.inner, z.as_ref(), &y, p, link).map_err(to_py)?;
    Ok(RegressionModel { fit })
}

fn cluster_dict<'py>(py: Python<'py>, r: &fdakit::ClusterResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("g", r.g)?;
    d.set_item("assignments", r.assignments.clone())?;
    d.set_item("centroid_coeffs", rows(&r.centroid_coeffs))?;
    d.set_item("inertia", r.inertia)?;
    d.set_item("silhouette", r.silhouette)?;
    d.set_item("n_iter", r.n_iter)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Functional K-means with `g` clusters; labels are 0-based.
#[pyfunction]
#[pyo3(signature = (ds, g, n_restarts = 10, max_iter = 100, seed = 1))]
fn kmeans<'py>(
    py: Python<'py>,
    ds: PyRef<'_, Dataset>,
    g: usize,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = fdakit::fkmeans(&ds.inner, g, n_restarts, max_iter, seed).map_err(to_py)?;
    cluster_dict(py, &r)
}

/// K-means for each `g` in `g_min..=g_max`, choosing the best silhouette.
#[pyfunction]
#[pyo3(signature = (ds, g_min = 2, g_max = 6, n_restarts = 10, max_iter = 100, seed = 1))]
fn select_g<'py>(
    py: Python<'py>,
    ds: PyRef<'_, Dataset>,
    g_min: usize,
    g_max: usize,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let sel = fdakit::select_g(&ds.inner, g_min, g_max, n_restarts, max_iter, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("best_g", sel.best_g)?;
    let results = sel
        .results
        .iter()
        .map(|r| cluster_dict(py, r))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("results", results)?;
    Ok(d)
}

#[pyfunction]
fn silhouette(ds: PyRef<'_, Dataset>, assignments: Vec<usize>) -> PyResult<f64> {
    fdakit::silhouette_score(&ds.inner, &assignments).map_err(to_py)
}

/// Simplified spatial scan; `coords` holds one `(x, y)` per curve.
#[pyfunction]
#[pyo3(signature = (ds, coords, max_fraction = 0.5, n_perm = 999, grid_size = 101, seed = 1))]
fn scan<'py>(
    py: Python<'py>,
    ds: PyRef<'_, Dataset>,
    coords: Vec<(f64, f64)>,
    max_fraction: f64,
    n_perm: usize,
    grid_size: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let coords = coords.into_iter().map(|(x, y)| [x, y]).collect();
    let sds = fdakit::SpatialFunctionalDataSet::new(ds.inner.clone(), coords).map_err(to_py)?;
    let g = fdakit::EvalGrid::uniform(ds.inner.basis().domain(), grid_size).map_err(to_py)?;
    let r = fdakit::detect_cluster(&sds, max_fraction, &g, n_perm, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("window", r.window)?;
    d.set_item("center_index", r.center_index)?;
    d.set_item("radius", r.radius)?;
    d.set_item("statistic", r.statistic)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("n_perm", r.n_perm)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Curves from a Fourier Karhunen–Loève model as `(id, times, values)` tuples.
#[pyfunction]
#[pyo3(signature = (n, eigenvalues, k = 5, mean = None, grid_size = 101, noise_sd = 0.0, seed = 1, lo = 0.0, hi = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    n: usize,
    eigenvalues: Vec<f64>,
    k: usize,
    mean: Option<Vec<f64>>,
    grid_size: usize,
    noise_sd: f64,
    seed: u64,
    lo: f64,
    hi: f64,
) -> PyResult<Vec<(String, Vec<f64>, Vec<f64>)>> {
    let domain = fdakit::Domain::new(lo, hi).map_err(to_py)?;
    let basis = fdakit::BasisSystem::fourier(k, domain).map_err(to_py)?;
    let spec = fdakit::KlSpec {
        grid: fdakit::EvalGrid::uniform(domain, grid_size).map_err(to_py)?,
        basis,
        mean_coeffs: mean.unwrap_or_default(),
        eigenvalues,
        n,
        noise_sd,
        seed,
    };
    let curves = fdakit::simulate(&spec).map_err(to_py)?;
    Ok(curves.into_iter().map(|c| (c.id, c.times, c.values)).collect())
}

#[pymodule]
fn fdakit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Basis>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<RegressionModel>()?;
    m.add_function(wrap_pyfunction!(fpca, m)?)?;
    m.add_function(wrap_pyfunction!(regress, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(select_g, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
