//! Functional K-means under the L² metric.
//!
//! Squared distances between curves are `(a − c)ᵀW(a − c)`. Mapping each
//! coefficient row through `W^{1/2}` turns this into a plain Euclidean
//! distance, so Lloyd iterations run on the mapped rows while centroids are
//! kept as coefficient means.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::gram_sqrt;
use crate::error::{FdaError, Result};
use crate::smoothing::FunctionalDataSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Number of clusters.
    pub g: usize,
    /// Cluster label of each curve, `0..g`.
    pub assignments: Vec<usize>,
    /// `g × K` centroid coefficients.
    pub centroid_coeffs: DMatrix<f64>,
    pub inertia: f64,
    /// Average silhouette; `None` when `g == 1`.
    pub silhouette: Option<f64>,
    pub seed: u64,
    pub n_iter: usize,
    /// Inertia after every Lloyd iteration of the winning restart.
    pub inertia_trace: Vec<f64>,
}

/// Coefficient rows mapped so that Euclidean distance equals L² distance.
fn metric_coordinates(ds: &FunctionalDataSet) -> Result<DMatrix<f64>> {
    let (w_sqrt, _) = gram_sqrt(&ds.basis().gram_matrix())?;
    Ok(ds.coefficients() * w_sqrt)
}

fn sq_dist(y: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, g: usize) -> f64 {
    y.row(i)
        .iter()
        .zip(c.row(g).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Squared L² distance between curves `i` and `j` of a dataset.
pub fn l2_distance_sq(ds: &FunctionalDataSet, i: usize, j: usize) -> f64 {
    let diff = ds.coefficients().row(i) - ds.coefficients().row(j);
    (&diff * ds.basis().gram_matrix() * diff.transpose())[0]
}

/// One restart of Lloyd's algorithm from the given initial centres (rows of
/// `centres`, in metric coordinates).
struct LloydRun {
    assignments: Vec<usize>,
    inertia: f64,
    trace: Vec<f64>,
    n_iter: usize,
}

fn lloyd(y: &DMatrix<f64>, mut centres: DMatrix<f64>, max_iter: usize) -> LloydRun {
    let n = y.nrows();
    let g = centres.nrows();
    let mut assignments = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut n_iter = 0;
    for _ in 0..max_iter {
        n_iter += 1;
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..g {
                let d = sq_dist(y, i, &centres, c);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        repair_empty_clusters(y, &centres, &mut assignments, g);
        centres = cluster_means(y, &assignments, g);
        trace.push(inertia_of(y, &centres, &assignments));
        if !changed {
            break;
        }
    }
    let inertia = *trace.last().unwrap_or(&0.0);
    LloydRun {
        assignments,
        inertia,
        trace,
        n_iter,
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty_clusters(
    y: &DMatrix<f64>,
    centres: &DMatrix<f64>,
    assignments: &mut [usize],
    g: usize,
) {
    loop {
        let mut counts = vec![0usize; g];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &a) in assignments.iter().enumerate() {
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(y, i, centres, a);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        match far {
            Some(i) => assignments[i] = empty,
            None => return,
        }
    }
}

fn cluster_means(data: &DMatrix<f64>, assignments: &[usize], g: usize) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(g, data.ncols());
    let mut counts = vec![0usize; g];
    for (i, &a) in assignments.iter().enumerate() {
        let mut row = sums.row_mut(a);
        row += data.row(i);
        counts[a] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            sums.row_mut(c).unscale_mut(count as f64);
        }
    }
    sums
}

fn inertia_of(y: &DMatrix<f64>, centres: &DMatrix<f64>, assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(y, i, centres, a))
        .sum()
}

/// Distance-weighted seeding: each new centre is drawn with probability
/// proportional to the squared distance to the nearest existing centre.
fn weighted_seeding(y: &DMatrix<f64>, g: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = y.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| {
            let d = y.row(i) - y.row(chosen[0]);
            d.norm_squared()
        })
        .collect();
    while chosen.len() < g {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // Round-off can leave `target` past the last positive weight.
            if nearest[pick] == 0.0 {
                pick = nearest.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // All remaining points coincide with a centre; take unused indices.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            let dn = (y.row(i) - y.row(next)).norm_squared();
            if dn < *d {
                *d = dn;
            }
        }
    }
    y.select_rows(&chosen)
}

/// Functional K-means with `n_restarts` seeded restarts; the restart with
/// the lowest inertia wins (earliest restart on ties).
pub fn fkmeans(
    ds: &FunctionalDataSet,
    g: usize,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterResult> {
    let n = ds.n_curves();
    if g == 0 || g > n {
        return Err(FdaError::InvalidArgument(format!(
            "number of clusters must be in 1..={n}, got {g}"
        )));
    }
    if n_restarts == 0 || max_iter == 0 {
        return Err(FdaError::InvalidArgument(
            "restarts and iteration limit must be positive".into(),
        ));
    }
    let y = metric_coordinates(ds)?;
    let runs: Vec<LloydRun> = (0..n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let init = weighted_seeding(&y, g, &mut rng);
            lloyd(&y, init, max_iter)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");

    let centroid_coeffs = cluster_means(ds.coefficients(), &best.assignments, g);
    let silhouette = if g >= 2 {
        Some(silhouette_from_coordinates(&y, &best.assignments, g))
    } else {
        None
    };
    Ok(ClusterResult {
        g,
        assignments: best.assignments,
        centroid_coeffs,
        inertia: best.inertia,
        silhouette,
        seed,
        n_iter: best.n_iter,
        inertia_trace: best.trace,
    })
}

/// Average silhouette width under the L² distance. Singletons score 0, as
/// does any point whose within- and between-cluster distances are both 0.
pub fn silhouette_score(ds: &FunctionalDataSet, assignments: &[usize]) -> Result<f64> {
    if assignments.len() != ds.n_curves() {
        return Err(FdaError::DimensionMismatch {
            context: "assignments vs number of curves",
            expected: ds.n_curves(),
            found: assignments.len(),
        });
    }
    let g = assignments.iter().max().map_or(0, |m| m + 1);
    if g < 2 {
        return Err(FdaError::InvalidArgument(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let mut counts = vec![0usize; g];
    for &a in assignments {
        counts[a] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(FdaError::InvalidArgument(format!("cluster {empty} is empty")));
    }
    let y = metric_coordinates(ds)?;
    Ok(silhouette_from_coordinates(&y, assignments, g))
}

fn silhouette_from_coordinates(y: &DMatrix<f64>, assignments: &[usize], g: usize) -> f64 {
    let n = y.nrows();
    let mut counts = vec![0usize; g];
    for &a in assignments {
        counts[a] += 1;
    }
    let total: f64 = (0..n)
        .map(|i| {
            let own = assignments[i];
            if counts[own] < 2 {
                return 0.0;
            }
            let mut sums = vec![0.0; g];
            for j in 0..n {
                if j != i {
                    sums[assignments[j]] += (y.row(i) - y.row(j)).norm();
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..g)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .sum();
    total / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSelection {
    pub best_g: usize,
    pub results: Vec<ClusterResult>,
}

/// Runs K-means for each `G` in `g_min..=g_max` and keeps the one with the
/// highest average silhouette (smallest `G` on ties).
pub fn select_g(
    ds: &FunctionalDataSet,
    g_min: usize,
    g_max: usize,
    n_restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<GSelection> {
    let n = ds.n_curves();
    if g_min < 2 || g_min > g_max || g_max + 1 > n {
        return Err(FdaError::InvalidArgument(format!(
            "cluster range must satisfy 2 <= g_min <= g_max <= n-1 = {}, got {g_min}..={g_max}",
            n.saturating_sub(1)
        )));
    }
    let results: Vec<ClusterResult> = (g_min..=g_max)
        .map(|g| fkmeans(ds, g, n_restarts, max_iter, seed))
        .collect::<Result<_>>()?;
    let mut best = &results[0];
    for r in &results[1..] {
        if r.silhouette > best.silhouette {
            best = r;
        }
    }
    Ok(GSelection {
        best_g: best.g,
        results,
    })
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let pairs = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| pairs(v)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSystem, Domain};
    use nalgebra::DVector;

    /// `per_bundle` noisy copies around each template row.
    fn bundles(templates: &[Vec<f64>], per_bundle: usize, spread: f64, seed: u64) -> (FunctionalDataSet, Vec<usize>) {
        let k = templates[0].len();
        let basis = BasisSystem::bspline(k, 4, Domain::new(0.0, 1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = templates.len() * per_bundle;
        let mut labels = Vec::with_capacity(n);
        let coef = DMatrix::from_fn(n, k, |i, j| templates[i / per_bundle][j] + spread * rng.random_range(-1.0..1.0));
        for i in 0..n {
            labels.push(i / per_bundle);
        }
        (FunctionalDataSet::with_default_ids(basis, coef).unwrap(), labels)
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let (ds, _) = bundles(&[vec![0.0; 6]], 10, 1.0, 1);
        let r = fkmeans(&ds, 1, 3, 50, 7).unwrap();
        let mean = ds.coefficients().row_mean();
        assert!((r.centroid_coeffs.row(0) - &mean).amax() < 1e-12);
        assert!(r.silhouette.is_none());
        let inertia: f64 = (0..10)
            .map(|i| {
                let d = ds.coefficients().row(i) - &mean;
                (&d * ds.basis().gram_matrix() * d.transpose())[0]
            })
            .sum();
        assert!((r.inertia - inertia).abs() < 1e-8);
    }

    #[test]
    fn one_cluster_per_curve() {
        let (ds, _) = bundles(&[vec![0.0; 5]], 6, 1.0, 2);
        let r = fkmeans(&ds, 6, 4, 50, 3).unwrap();
        assert!(r.inertia.abs() < 1e-20);
        let mut labels = r.assignments.clone();
        labels.sort();
        assert_eq!(labels, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_cluster_counts() {
        let (ds, _) = bundles(&[vec![0.0; 5]], 4, 1.0, 3);
        assert!(fkmeans(&ds, 0, 1, 10, 0).is_err());
        assert!(fkmeans(&ds, 5, 1, 10, 0).is_err());
        assert!(select_g(&ds, 3, 2, 1, 10, 0).is_err());
        assert!(select_g(&ds, 1, 2, 1, 10, 0).is_err());
        assert!(select_g(&ds, 2, 4, 1, 10, 0).is_err());
    }

    #[test]
    fn silhouette_conventions() {
        let basis = BasisSystem::bspline(5, 4, Domain::new(0.0, 1.0).unwrap()).unwrap();
        let two = FunctionalDataSet::with_default_ids(
            basis.clone(),
            DMatrix::from_fn(2, 5, |i, _| i as f64),
        )
        .unwrap();
        assert_eq!(silhouette_score(&two, &[0, 1]).unwrap(), 0.0);

        let same = FunctionalDataSet::with_default_ids(basis, DMatrix::from_element(6, 5, 1.5)).unwrap();
        assert_eq!(silhouette_score(&same, &[0, 1, 0, 1, 0, 1]).unwrap(), 0.0);
        assert!(silhouette_score(&same, &[0; 6]).is_err());
        assert!(silhouette_score(&same, &[0, 2, 0, 2, 0, 2]).is_err());
    }

    #[test]
    fn silhouette_is_label_permutation_invariant() {
        let (ds, labels) = bundles(&[vec![0.0; 6], vec![3.0; 6], vec![-3.0; 6]], 5, 1.0, 4);
        let s = silhouette_score(&ds, &labels).unwrap();
        let relabeled: Vec<usize> = labels.iter().map(|&l| [2, 0, 1][l]).collect();
        assert!((silhouette_score(&ds, &relabeled).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn lloyd_trace_is_monotone_and_result_consistent() {
        let (ds, _) = bundles(&[vec![0.0; 7], vec![1.0; 7], vec![0.5; 7]], 15, 1.5, 5);
        for seed in 0..10 {
            let r = fkmeans(&ds, 4, 3, 100, seed).unwrap();
            assert!(r.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
            // Inertia recomputed from coefficients and W.
            let w = ds.basis().gram_matrix();
            let recomputed: f64 = (0..ds.n_curves())
                .map(|i| {
                    let d = ds.coefficients().row(i) - r.centroid_coeffs.row(r.assignments[i]);
                    (&d * &w * d.transpose())[0]
                })
                .sum();
            assert!((recomputed - r.inertia).abs() < 1e-8 * r.inertia.max(1.0));
            // Each curve sits with its nearest centroid.
            for i in 0..ds.n_curves() {
                let own = {
                    let d = ds.coefficients().row(i) - r.centroid_coeffs.row(r.assignments[i]);
                    (&d * &w * d.transpose())[0]
                };
                for c in 0..4 {
                    let d = ds.coefficients().row(i) - r.centroid_coeffs.row(c);
                    assert!(own <= (&d * &w * d.transpose())[0] + 1e-10);
                }
            }
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let (ds, _) = bundles(&[vec![0.0; 6], vec![2.0; 6]], 12, 1.5, 6);
        let a = fkmeans(&ds, 3, 5, 100, 42).unwrap();
        let b = fkmeans(&ds, 3, 5, 100, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
    }

    #[test]
    fn empty_cluster_repair_keeps_all_clusters() {
        // Duplicate points force coinciding seeds.
        let basis = BasisSystem::bspline(4, 4, Domain::new(0.0, 1.0).unwrap()).unwrap();
        let mut coef = DMatrix::from_element(8, 4, 0.0);
        coef.row_mut(7).copy_from(&DVector::from_element(4, 5.0).transpose());
        let ds = FunctionalDataSet::with_default_ids(basis, coef).unwrap();
        let r = fkmeans(&ds, 3, 2, 20, 0).unwrap();
        let mut counts = [0; 3];
        for &a in &r.assignments {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }
}
