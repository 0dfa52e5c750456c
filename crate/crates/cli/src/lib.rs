//! Batch command line front end for `fdakit`.
//!
//! Each subcommand reads CSV input, runs one pipeline and writes CSV, JSON
//! and optional SVG files into an output directory. Every file records the
//! command, its parameters, the seed and the tool version.

mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdakit::io::{self, Provenance};
use fdakit::scan::DEFAULT_GRID_SIZE;
use fdakit::{
    beta_function, build_dataset, detect_cluster, eval_curves, explained_variance, fit_gflm, fkmeans,
    fpca, select_g, simulate, BasisSystem, ClusterResult, Domain, ErrorClass, EvalGrid, FdaError,
    FunctionalDataSet, KlSpec, Link, RawCurve, Result, SpatialFunctionalDataSet,
};
use nalgebra::DMatrix;
use serde::Serialize;

use plot::{Chart, Series};

const PLOT_POINTS: usize = 201;

#[derive(Debug, Parser)]
#[command(name = "fdakit", version, about = "Functional data analysis on basis-expanded curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit basis coefficients to raw curves.
    Smooth(SmoothArgs),
    /// Functional principal component analysis.
    Fpca(FpcaArgs),
    /// Scalar-on-function regression on FPCA scores.
    Regress(RegressArgs),
    /// Functional K-means with silhouette selection of the cluster count.
    Cluster(ClusterArgs),
    /// Simplified spatial scan for a cluster of unusual curves.
    Scan(ScanArgs),
    /// Draw curves from a Karhunen–Loève model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    Bspline,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkArg {
    Identity,
    Log,
    Logit,
}

impl From<LinkArg> for Link {
    fn from(l: LinkArg) -> Self {
        match l {
            LinkArg::Identity => Link::Identity,
            LinkArg::Log => Link::Log,
            LinkArg::Logit => Link::Logit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainArg {
    pub lo: f64,
    pub hi: f64,
}

fn parse_domain(s: &str) -> std::result::Result<DomainArg, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid upper bound `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("domain needs finite lo < hi, got {lo}:{hi}"));
    }
    Ok(DomainArg { lo, hi })
}

/// Curve input and the basis used to smooth raw curves.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Long-format curves (`id,t,value`) or a coefficient table from `smooth`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = BasisArg::Bspline)]
    pub basis: BasisArg,
    /// Number of basis functions.
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// B-spline order (4 = cubic).
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Basis domain `lo:hi`; defaults to the range of observation times.
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    pub domain: Option<DomainArg>,
    /// Ridge penalty for the per-curve least-squares fits.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory, created if absent.
    #[arg(long, default_value = "fdakit-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also write `curves.svg`.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SmoothArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FpcaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Components to keep; default is the smallest count reaching 95% of the variance.
    #[arg(long)]
    pub p: Option<usize>,
    /// Points of the grid used for `eigenfunctions.csv`.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegressArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Response table `id,y`.
    #[arg(long)]
    pub response: PathBuf,
    /// Scalar covariate table `id,z1,...`.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LinkArg::Identity)]
    pub link: LinkArg,
    /// FPCA components in the model; default is the 95% variance rule.
    #[arg(long)]
    pub p: Option<usize>,
    /// Points of the grid on which the coefficient function is reported.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 2)]
    pub g_min: usize,
    /// Largest cluster count tried; defaults to min(6, n - 1).
    #[arg(long)]
    pub g_max: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub n_restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Planar coordinates `id,x,y`.
    #[arg(long)]
    pub coords: PathBuf,
    /// Largest window as a fraction of the locations.
    #[arg(long, default_value_t = 0.5)]
    pub max_fraction: f64,
    #[arg(long, default_value_t = 999)]
    pub n_perm: usize,
    /// Time points at which the statistic is evaluated.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Number of curves.
    #[arg(long)]
    pub n: usize,
    /// Size of the Fourier basis (odd).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true, default_value = "0:1")]
    pub domain: DomainArg,
    /// Comma-separated nonincreasing eigenvalues.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub eigenvalues: Vec<f64>,
    /// Comma-separated Fourier coefficients of the mean.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mean: Vec<f64>,
    /// Observation points per curve, equally spaced over the domain.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// Process exit status for an error: 2 usage, 3 data, 4 numerical.
pub fn exit_code(e: &FdaError) -> i32 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Smooth(a) => smooth(a),
        Command::Fpca(a) => run_fpca(a),
        Command::Regress(a) => regress(a),
        Command::Cluster(a) => cluster(a),
        Command::Scan(a) => scan(a),
        Command::Simulate(a) => run_simulate(a),
    }
}

fn provenance<T: Serialize>(command: &str, args: &T, seed: Option<u64>) -> Provenance {
    let parameters = serde_json::to_value(args).expect("arguments serialize");
    Provenance::new(command, parameters, seed)
}

fn io_error(path: &Path, source: std::io::Error) -> FdaError {
    FdaError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn prepare_output(out: &OutputArgs) -> Result<&Path> {
    fs::create_dir_all(&out.out).map_err(|e| io_error(&out.out, e))?;
    Ok(&out.out)
}

/// Writes a CSV file with a provenance comment, a header and rows.
fn write_table(path: &Path, prov: &Provenance, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&prov.comment_line());
    text.push('\n');
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}

fn strings(values: &[&str]) -> Vec<String> {
    values.iter().map(|s| s.to_string()).collect()
}

fn infer_domain(curves: &[RawCurve]) -> Result<Domain> {
    let (lo, hi) = curves
        .iter()
        .flat_map(|c| c.times.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if !(lo < hi) {
        return Err(FdaError::InvalidArgument(
            "cannot infer a domain from the observation times; pass --domain lo:hi".into(),
        ));
    }
    Domain::new(lo, hi)
}

fn make_basis(kind: BasisArg, k: usize, order: usize, domain: Domain) -> Result<BasisSystem> {
    match kind {
        BasisArg::Bspline => BasisSystem::bspline(k, order, domain),
        BasisArg::Fourier => BasisSystem::fourier(k, domain),
    }
}

/// Coefficient tables are used as they are; raw curves are smoothed.
fn load_dataset(a: &DataArgs) -> Result<FunctionalDataSet> {
    if io::is_coefficient_file(&a.input)? {
        return io::read_coefficients(&a.input);
    }
    let curves = io::read_curves(&a.input)?;
    let domain = match a.domain {
        Some(d) => Domain::new(d.lo, d.hi)?,
        None => infer_domain(&curves)?,
    };
    let basis = make_basis(a.basis, a.k, a.order, domain)?;
    build_dataset(&curves, &basis, a.ridge)
}

fn curve_series(ds: &FunctionalDataSet, groups: &[usize]) -> Result<Vec<Series>> {
    let grid = EvalGrid::uniform(ds.basis().domain(), PLOT_POINTS)?;
    let values = eval_curves(ds, &grid)?;
    Ok((0..ds.n_curves())
        .map(|i| Series {
            xs: grid.points().to_vec(),
            ys: values.row(i).iter().copied().collect(),
            group: groups[i],
        })
        .collect())
}

fn plot_curves(
    dir: &Path,
    ds: &FunctionalDataSet,
    prov: &Provenance,
    title: &str,
    groups: Option<(&[usize], Vec<String>)>,
) -> Result<()> {
    let zeros = vec![0; ds.n_curves()];
    let (labels, names) = groups.unwrap_or((&zeros, Vec::new()));
    let chart = Chart {
        title,
        x_label: "t",
        y_label: "x(t)",
        groups: names,
        series: curve_series(ds, labels)?,
    };
    plot::save(&dir.join("curves.svg"), &chart, prov)
}

fn smooth(a: &SmoothArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let dir = prepare_output(&a.output)?;
    let prov = provenance("smooth", a, None);
    io::save_coefficients(&dir.join("coefficients.csv"), &ds, &prov)?;
    if a.output.plot {
        plot_curves(dir, &ds, &prov, "Fitted curves", None)?;
    }
    Ok(())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn column_vectors(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct FpcaReport<'a> {
    basis: &'a BasisSystem,
    n_curves: usize,
    n_components: usize,
    eigenvalues: &'a [f64],
    explained_variance: &'a [f64],
    all_eigenvalues: &'a [f64],
    total_variance: f64,
    mean_coefficients: Vec<f64>,
    /// One coefficient vector per eigenfunction.
    eigenfunction_coefficients: Vec<Vec<f64>>,
}

fn run_fpca(a: &FpcaArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let r = fpca(&ds, a.p)?;
    let p = r.n_components();
    // Degenerate data have no variance to share out.
    let ratios = explained_variance(&r).unwrap_or_else(|_| vec![0.0; p]);
    let grid = EvalGrid::uniform(ds.basis().domain(), a.grid_size)?;
    let dir = prepare_output(&a.output)?;
    let prov = provenance("fpca", a, None);

    let mut cumulative = 0.0;
    let rows: Vec<Vec<String>> = (0..p)
        .map(|j| {
            cumulative += ratios[j];
            vec![
                (j + 1).to_string(),
                r.eigenvalues[j].to_string(),
                ratios[j].to_string(),
                cumulative.to_string(),
            ]
        })
        .collect();
    write_table(
        &dir.join("eigenvalues.csv"),
        &prov,
        &strings(&["component", "eigenvalue", "explained_variance", "cumulative"]),
        &rows,
    )?;

    let mut header = vec!["id".to_string()];
    header.extend((1..=p).map(|j| format!("score{j}")));
    let rows: Vec<Vec<String>> = ds
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut row = vec![id.clone()];
            row.extend(r.scores.row(i).iter().map(|v| v.to_string()));
            row
        })
        .collect();
    write_table(&dir.join("scores.csv"), &prov, &header, &rows)?;

    let f = r.eigenfunctions(&grid)?;
    let mean = r.mean.eval(&grid)?;
    let mut header = strings(&["t", "mean"]);
    header.extend((1..=p).map(|j| format!("f{j}")));
    let rows: Vec<Vec<String>> = grid
        .points()
        .iter()
        .enumerate()
        .map(|(l, t)| {
            let mut row = vec![t.to_string(), mean[l].to_string()];
            row.extend(f.row(l).iter().map(|v| v.to_string()));
            row
        })
        .collect();
    write_table(&dir.join("eigenfunctions.csv"), &prov, &header, &rows)?;

    let report = FpcaReport {
        basis: ds.basis(),
        n_curves: ds.n_curves(),
        n_components: p,
        eigenvalues: &r.eigenvalues,
        explained_variance: &ratios,
        all_eigenvalues: &r.all_eigenvalues,
        total_variance: r.total_variance,
        mean_coefficients: r.mean.coefficients.iter().copied().collect(),
        eigenfunction_coefficients: column_vectors(&r.eigen_coeffs),
    };
    io::save_json(&dir.join("fpca.json"), &prov, &report)?;
    if a.output.plot {
        plot_curves(dir, &ds, &prov, "Fitted curves", None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RegressionReport<'a> {
    link: Link,
    n_curves: usize,
    n_components: usize,
    alpha: f64,
    covariate_names: &'a [String],
    theta: &'a [f64],
    d_coeffs: &'a [f64],
    /// Intercept, covariates, then components.
    std_errors: &'a [f64],
    dispersion: f64,
    deviance: f64,
    deviance_trace: &'a [f64],
    iterations: usize,
    eigenvalues: &'a [f64],
    beta: BetaCurve,
}

#[derive(Serialize)]
struct BetaCurve {
    t: Vec<f64>,
    value: Vec<f64>,
}

fn regress(a: &RegressArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let source = a.response.display().to_string();
    let (_, rows) = io::read_keyed_table(&a.response)?;
    let y: Vec<f64> = io::align_rows(ds.ids(), &rows, &source)?
        .into_iter()
        .map(|r| r[0])
        .collect();
    let (names, z) = match &a.covariates {
        Some(path) => {
            let (names, rows) = io::read_keyed_table(path)?;
            let aligned = io::align_rows(ds.ids(), &rows, &path.display().to_string())?;
            let z = DMatrix::from_fn(ds.n_curves(), names.len(), |i, j| aligned[i][j]);
            (names, Some(z))
        }
        None => (Vec::new(), None),
    };
    let fit = fit_gflm(&ds, z.as_ref(), &y, a.p, a.link.into())?;
    let grid = EvalGrid::uniform(ds.basis().domain(), a.grid_size)?;
    let beta = beta_function(&fit, &grid)?;
    let dir = prepare_output(&a.output)?;
    let prov = provenance("regress", a, None);

    let report = RegressionReport {
        link: fit.link,
        n_curves: ds.n_curves(),
        n_components: fit.n_components(),
        alpha: fit.alpha,
        covariate_names: &names,
        theta: &fit.theta,
        d_coeffs: &fit.d_coeffs,
        std_errors: &fit.std_errors,
        dispersion: fit.dispersion,
        deviance: fit.deviance,
        deviance_trace: &fit.deviance_trace,
        iterations: fit.iterations,
        eigenvalues: &fit.fpca.eigenvalues,
        beta: BetaCurve {
            t: grid.points().to_vec(),
            value: beta.iter().copied().collect(),
        },
    };
    io::save_json(&dir.join("fit.json"), &prov, &report)?;
    let rows: Vec<Vec<String>> = ds
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| vec![id.clone(), y[i].to_string(), fit.fitted[i].to_string()])
        .collect();
    write_table(&dir.join("fitted.csv"), &prov, &strings(&["id", "observed", "fitted"]), &rows)?;
    if a.output.plot {
        plot_curves(dir, &ds, &prov, "Fitted curves", None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterSummary {
    g: usize,
    silhouette: Option<f64>,
    inertia: f64,
    n_iter: usize,
    inertia_trace: Vec<f64>,
    sizes: Vec<usize>,
    centroid_coefficients: Vec<Vec<f64>>,
}

impl From<&ClusterResult> for ClusterSummary {
    fn from(r: &ClusterResult) -> Self {
        let mut sizes = vec![0; r.g];
        for &a in &r.assignments {
            sizes[a] += 1;
        }
        ClusterSummary {
            g: r.g,
            silhouette: r.silhouette,
            inertia: r.inertia,
            n_iter: r.n_iter,
            inertia_trace: r.inertia_trace.clone(),
            sizes,
            centroid_coefficients: matrix_rows(&r.centroid_coeffs),
        }
    }
}

#[derive(Serialize)]
struct ClusterReport {
    best_g: usize,
    seed: u64,
    /// Labels are 1-based, as in `assignments.csv`.
    assignments: Vec<usize>,
    candidates: Vec<ClusterSummary>,
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let n = ds.n_curves();
    let g_max = a.g_max.unwrap_or_else(|| 6.min(n.saturating_sub(1)).max(a.g_min));
    let results = if a.g_min == g_max {
        vec![fkmeans(&ds, a.g_min, a.n_restarts, a.max_iter, a.seed)?]
    } else {
        select_g(&ds, a.g_min, g_max, a.n_restarts, a.max_iter, a.seed)?.results
    };
    let mut best = &results[0];
    for r in &results[1..] {
        if r.silhouette > best.silhouette {
            best = r;
        }
    }
    let dir = prepare_output(&a.output)?;
    let prov = provenance("cluster", a, Some(a.seed));

    let rows: Vec<Vec<String>> = ds
        .ids()
        .iter()
        .zip(&best.assignments)
        .map(|(id, g)| vec![id.clone(), (g + 1).to_string()])
        .collect();
    write_table(&dir.join("assignments.csv"), &prov, &strings(&["id", "label"]), &rows)?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.g.to_string(),
                r.silhouette.map_or_else(String::new, |s| s.to_string()),
                r.inertia.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("silhouette.csv"), &prov, &strings(&["g", "silhouette", "inertia"]), &rows)?;
    let report = ClusterReport {
        best_g: best.g,
        seed: a.seed,
        assignments: best.assignments.iter().map(|g| g + 1).collect(),
        candidates: results.iter().map(ClusterSummary::from).collect(),
    };
    io::save_json(&dir.join("cluster.json"), &prov, &report)?;
    if a.output.plot {
        let names = (1..=best.g).map(|g| format!("cluster {g}")).collect();
        plot_curves(
            dir,
            &ds,
            &prov,
            &format!("Curves by cluster (G = {})", best.g),
            Some((&best.assignments, names)),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanReport<'a> {
    statistic: f64,
    p_value: f64,
    n_perm: usize,
    seed: u64,
    n_windows: usize,
    center_id: &'a str,
    radius: f64,
    window_ids: Vec<&'a str>,
    /// 0-based positions of the window members in the curve order.
    window: &'a [usize],
}

fn scan(a: &ScanArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let source = a.coords.display().to_string();
    let (columns, rows) = io::read_keyed_table(&a.coords)?;
    if columns.len() != 2 {
        return Err(FdaError::Parse {
            path: source,
            line: 1,
            message: format!("expected columns id,x,y, found {} value columns", columns.len()),
        });
    }
    let coords: Vec<[f64; 2]> = io::align_rows(ds.ids(), &rows, &source)?
        .into_iter()
        .map(|r| [r[0], r[1]])
        .collect();
    let grid = EvalGrid::uniform(ds.basis().domain(), a.grid_size)?;
    let sds = SpatialFunctionalDataSet::new(ds.clone(), coords)?;
    let result = detect_cluster(&sds, a.max_fraction, &grid, a.n_perm, a.seed)?;
    let dir = prepare_output(&a.output)?;
    let prov = provenance("scan", a, Some(a.seed));

    let ids = ds.ids();
    let report = ScanReport {
        statistic: result.statistic,
        p_value: result.p_value,
        n_perm: result.n_perm,
        seed: result.seed,
        n_windows: result.n_windows,
        center_id: &ids[result.center_index],
        radius: result.radius,
        window_ids: result.window.iter().map(|&i| ids[i].as_str()).collect(),
        window: &result.window,
    };
    io::save_json(&dir.join("scan.json"), &prov, &report)?;
    let mut inside = vec![0usize; ds.n_curves()];
    for &i in &result.window {
        inside[i] = 1;
    }
    let rows: Vec<Vec<String>> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let [x, y] = sds.coords()[i];
            vec![id.clone(), x.to_string(), y.to_string(), inside[i].to_string()]
        })
        .collect();
    write_table(&dir.join("window.csv"), &prov, &strings(&["id", "x", "y", "inside"]), &rows)?;
    if a.output.plot {
        plot_curves(
            dir,
            &ds,
            &prov,
            &format!("Most likely cluster (p = {})", result.p_value),
            Some((&inside, vec!["outside".into(), "inside".into()])),
        )?;
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let basis = BasisSystem::fourier(a.k, Domain::new(a.domain.lo, a.domain.hi)?)?;
    let spec = KlSpec {
        grid: EvalGrid::uniform(basis.domain(), a.grid_size)?,
        basis,
        mean_coeffs: a.mean.clone(),
        eigenvalues: a.eigenvalues.clone(),
        n: a.n,
        noise_sd: a.noise_sd,
        seed: a.seed,
    };
    let curves = simulate(&spec)?;
    let dir = prepare_output(&a.output)?;
    let prov = provenance("simulate", a, Some(a.seed));
    io::save_curves(&dir.join("curves.csv"), &curves, &prov)?;
    if a.output.plot {
        let chart = Chart {
            title: "Simulated curves",
            x_label: "t",
            y_label: "x(t)",
            groups: Vec::new(),
            series: curves
                .iter()
                .map(|c| Series {
                    xs: c.times.clone(),
                    ys: c.values.clone(),
                    group: 0,
                })
                .collect(),
        };
        plot::save(&dir.join("curves.svg"), &chart, &prov)?;
    }
    Ok(())
}
