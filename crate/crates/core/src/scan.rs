//! Simplified spatial scan for functional data.
//!
//! This is not the published distribution-free functional spatial scan
//! statistic; it is a self-contained stand-in with the following definition.
//!
//! * Candidate windows are circular: for each location, the sets of its
//!   `1..=⌈max_fraction·n⌉` nearest locations (itself included), with
//!   duplicate sets removed. No window covers every location.
//! * A window `w` is scored by `Λ(w) = max_t |T_w(t)|`, where `T_w(t)` is the
//!   Welch two-sample t statistic comparing fitted curve values at time `t`
//!   inside and outside `w`. Time points where both sides have zero variance
//!   are skipped.
//! * The scan statistic is `max_w Λ(w)` over windows with at least two curves
//!   on each side. Its p-value comes from Monte Carlo permutations of the
//!   curves over the fixed set of locations:
//!   `p = (1 + #{replicates ≥ observed}) / (1 + n_perm)`.
//!
//! Replicate `r` draws its permutation from a ChaCha8 stream `r` seeded by the
//! caller's seed, so serial and parallel runs agree exactly.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::EvalGrid;
use crate::error::{FdaError, Result};
use crate::smoothing::{eval_curves, FunctionalDataSet};

/// Offset added to the x coordinate of exactly repeated locations.
pub const TIE_JITTER: f64 = 1e-9;
/// Smallest permutation count for which `p ≤ 0.05` is reachable.
pub const MIN_PERMUTATIONS: usize = 19;
/// Default number of time points at which curves are compared.
pub const DEFAULT_GRID_SIZE: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFunctionalDataSet {
    ds: FunctionalDataSet,
    coords: Vec<[f64; 2]>,
}

impl SpatialFunctionalDataSet {
    /// Pairs curves with planar coordinates. Exact coordinate repeats are
    /// shifted along x by multiples of [`TIE_JITTER`] until unique.
    pub fn new(ds: FunctionalDataSet, mut coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.len() != ds.n_curves() {
            return Err(FdaError::DimensionMismatch {
                context: "coordinates vs number of curves",
                expected: ds.n_curves(),
                found: coords.len(),
            });
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FdaError::InvalidArgument("coordinates must be finite".into()));
        }
        let mut seen: HashSet<(u64, u64)> = HashSet::with_capacity(coords.len());
        for c in coords.iter_mut() {
            while !seen.insert((c[0].to_bits(), c[1].to_bits())) {
                c[0] += TIE_JITTER;
            }
        }
        Ok(SpatialFunctionalDataSet { ds, coords })
    }

    pub fn dataset(&self) -> &FunctionalDataSet {
        &self.ds
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn n_locations(&self) -> usize {
        self.coords.len()
    }
}

/// A candidate cluster: the `members.len()` nearest locations to `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: usize,
    /// Member locations, nearest first.
    pub members: Vec<usize>,
    /// Distance from the centre to the farthest member.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Locations in the most likely cluster, ascending.
    pub window: Vec<usize>,
    pub center_index: usize,
    pub radius: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub n_perm: usize,
    pub seed: u64,
    /// Number of candidate windows scanned.
    pub n_windows: usize,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// All circular windows, ordered by centre index then size.
pub fn enumerate_windows(coords: &[[f64; 2]], max_fraction: f64) -> Result<Vec<Window>> {
    let n = coords.len();
    if n < 3 {
        return Err(FdaError::InvalidArgument(format!(
            "spatial scan needs at least 3 locations, got {n}"
        )));
    }
    if !(max_fraction > 0.0 && max_fraction < 1.0) {
        return Err(FdaError::InvalidArgument(format!(
            "max_fraction must lie in (0, 1), got {max_fraction}"
        )));
    }
    let max_size = ((max_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut windows = Vec::new();
    for center in 0..n {
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|j| (distance(coords[center], coords[j]), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // The centre is its own nearest neighbour even against exact ties.
        if let Some(pos) = order.iter().position(|&(_, j)| j == center) {
            let c = order.remove(pos);
            order.insert(0, c);
        }
        for size in 1..=max_size {
            let members: Vec<usize> = order[..size].iter().map(|&(_, j)| j).collect();
            let mut key = members.clone();
            key.sort_unstable();
            if seen.insert(key) {
                windows.push(Window {
                    center,
                    members,
                    radius: order[size - 1].0,
                });
            }
        }
    }
    Ok(windows)
}

/// Running sums of centred curve values, one slot per time point.
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn zeros(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
        }
    }

    fn add(&mut self, row: &[f64]) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(row) {
            *s += v;
            *q += v * v;
        }
    }

    fn clear(&mut self) {
        self.sum.fill(0.0);
        self.sum_sq.fill(0.0);
    }
}

/// Curve values on the grid, centred per time point, with the
/// permutation-invariant totals precomputed.
struct ScanEngine {
    n: usize,
    n_times: usize,
    values: Vec<f64>,
    totals: Moments,
    /// Per-time threshold below which a standard error counts as zero.
    se_floor_sq: Vec<f64>,
}

impl ScanEngine {
    fn new(sds: &SpatialFunctionalDataSet, grid: &EvalGrid) -> Result<Self> {
        let raw = eval_curves(&sds.ds, grid)?;
        let (n, n_times) = raw.shape();
        let mut values = vec![0.0; n * n_times];
        let mut se_floor_sq = vec![0.0; n_times];
        for t in 0..n_times {
            let col = raw.column(t);
            let mean = col.sum() / n as f64;
            let scale = col.amax();
            se_floor_sq[t] = (1e-12 * scale).powi(2);
            for i in 0..n {
                values[i * n_times + t] = col[i] - mean;
            }
        }
        let mut totals = Moments::zeros(n_times);
        for i in 0..n {
            totals.add(&values[i * n_times..(i + 1) * n_times]);
        }
        Ok(ScanEngine {
            n,
            n_times,
            values,
            totals,
            se_floor_sq,
        })
    }

    fn row(&self, curve: usize) -> &[f64] {
        &self.values[curve * self.n_times..(curve + 1) * self.n_times]
    }

    /// `max_t T_w(t)²` for an inside set summarised by `inside`, or `None`
    /// when every time point is degenerate.
    fn max_t_squared(&self, inside: &Moments, n_in: usize) -> Option<f64> {
        let n1 = n_in as f64;
        let n2 = (self.n - n_in) as f64;
        let mut best: Option<f64> = None;
        for t in 0..self.n_times {
            let s1 = inside.sum[t];
            let q1 = inside.sum_sq[t];
            let s2 = self.totals.sum[t] - s1;
            let q2 = self.totals.sum_sq[t] - q1;
            let m1 = s1 / n1;
            let m2 = s2 / n2;
            let v1 = ((q1 - s1 * m1) / (n1 - 1.0)).max(0.0);
            let v2 = ((q2 - s2 * m2) / (n2 - 1.0)).max(0.0);
            let se2 = v1 / n1 + v2 / n2;
            if se2 <= self.se_floor_sq[t] {
                continue;
            }
            let diff = m1 - m2;
            let t2 = diff * diff / se2;
            if best.is_none_or(|b| t2 > b) {
                best = Some(t2);
            }
        }
        best
    }

    /// Largest `Λ` over scoreable windows, with the index of the window
    /// attaining it. `location_curve[k]` is the curve placed at location `k`.
    fn scan(&self, windows: &[Window], location_curve: &[usize]) -> Option<(f64, usize)> {
        let mut inside = Moments::zeros(self.n_times);
        let mut best: Option<(f64, usize)> = None;
        let mut w = 0;
        while w < windows.len() {
            // Windows sharing a centre are nested in nearest-first order, so
            // the inside sums can grow incrementally.
            let center = windows[w].center;
            inside.clear();
            let mut added = 0;
            while w < windows.len() && windows[w].center == center {
                let members = &windows[w].members;
                for &loc in &members[added..] {
                    inside.add(self.row(location_curve[loc]));
                }
                added = members.len();
                if added >= 2 && self.n - added >= 2 {
                    if let Some(t2) = self.max_t_squared(&inside, added) {
                        if best.is_none_or(|(b, _)| t2 > b) {
                            best = Some((t2, w));
                        }
                    }
                }
                w += 1;
            }
        }
        best.map(|(t2, w)| (t2.sqrt(), w))
    }
}

/// `Λ(w)`: the largest absolute Welch t statistic over the grid, comparing
/// curves inside `window` with the rest.
pub fn window_statistic(
    sds: &SpatialFunctionalDataSet,
    window: &[usize],
    grid: &EvalGrid,
) -> Result<f64> {
    let n = sds.n_locations();
    let mut inside = vec![false; n];
    for &i in window {
        if i >= n {
            return Err(FdaError::InvalidArgument(format!("location {i} out of range")));
        }
        inside[i] = true;
    }
    let n_in = inside.iter().filter(|&&b| b).count();
    if n_in < 2 || n - n_in < 2 {
        return Err(FdaError::UndefinedStatistic(format!(
            "window has {n_in} curves inside and {} outside; both sides need at least 2",
            n - n_in
        )));
    }
    let values = eval_curves(&sds.ds, grid)?;
    let mut best: Option<f64> = None;
    for t in 0..grid.len() {
        let col = values.column(t);
        let scale = col.amax();
        let side = |want: bool| {
            let vals: Vec<f64> = (0..n).filter(|&i| inside[i] == want).map(|i| col[i]).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            (m, v, vals.len() as f64)
        };
        let (m1, v1, n1) = side(true);
        let (m2, v2, n2) = side(false);
        let se = (v1 / n1 + v2 / n2).sqrt();
        if se <= 1e-12 * scale {
            continue;
        }
        let stat = ((m1 - m2) / se).abs();
        if best.is_none_or(|b| stat > b) {
            best = Some(stat);
        }
    }
    best.ok_or_else(|| {
        FdaError::DegenerateData("curves have zero variance on both sides at every time".into())
    })
}

/// Scan statistic for each of `n_perm` permutation replicates over a fixed
/// window list. Replicates with no scoreable window contribute 0.
pub fn permutation_statistics(
    sds: &SpatialFunctionalDataSet,
    windows: &[Window],
    grid: &EvalGrid,
    n_perm: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let engine = ScanEngine::new(sds, grid)?;
    Ok(replicate_statistics(&engine, windows, n_perm, seed))
}

fn replicate_statistics(engine: &ScanEngine, windows: &[Window], n_perm: usize, seed: u64) -> Vec<f64> {
    (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut perm: Vec<usize> = (0..engine.n).collect();
            perm.shuffle(&mut rng);
            engine.scan(windows, &perm).map_or(0.0, |(s, _)| s)
        })
        .collect()
}

/// Finds the most likely cluster and its Monte Carlo p-value.
pub fn detect_cluster(
    sds: &SpatialFunctionalDataSet,
    max_fraction: f64,
    grid: &EvalGrid,
    n_perm: usize,
    seed: u64,
) -> Result<ScanResult> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(FdaError::InvalidArgument(format!(
            "at least {MIN_PERMUTATIONS} permutations are needed, got {n_perm}"
        )));
    }
    let windows = enumerate_windows(&sds.coords, max_fraction)?;
    let engine = ScanEngine::new(sds, grid)?;
    let identity: Vec<usize> = (0..sds.n_locations()).collect();
    let (statistic, best) = engine.scan(&windows, &identity).ok_or_else(|| {
        FdaError::DegenerateData(
            "no window has a defined statistic (too few locations or constant curves)".into(),
        )
    })?;
    let replicates = replicate_statistics(&engine, &windows, n_perm, seed);
    let exceed = replicates.iter().filter(|&&s| s >= statistic).count();
    let mut window = windows[best].members.clone();
    window.sort_unstable();
    Ok(ScanResult {
        window,
        center_index: windows[best].center,
        radius: windows[best].radius,
        statistic,
        p_value: (1 + exceed) as f64 / (1 + n_perm) as f64,
        n_perm,
        seed,
        n_windows: windows.len(),
    })
}
