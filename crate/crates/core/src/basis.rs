//! Finite basis systems on a closed interval.
//!
//! Two families are supported: an orthonormal Fourier system and clamped
//! B-splines of arbitrary order. Both evaluate on point sets and produce
//! their Gram matrix `W[j][k] = ∫ φ_j φ_k`, which carries the L² geometry
//! into coefficient space.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{FdaError, Result};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FdaError::InvalidBasis(format!(
                "domain [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(Domain { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Checks that `t` lies in the domain. Points within a relative 1e-12 of
    /// an end point are snapped onto it to absorb grid round-off.
    pub fn locate(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.width();
        if t >= self.lo && t <= self.hi {
            Ok(t)
        } else if t >= self.lo - slack && t < self.lo {
            Ok(self.lo)
        } else if t <= self.hi + slack && t > self.hi {
            Ok(self.hi)
        } else {
            Err(FdaError::Domain {
                value: t,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Fourier,
    BSpline,
}

impl std::str::FromStr for BasisKind {
    type Err = FdaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(BasisKind::Fourier),
            "bspline" | "b-spline" => Ok(BasisKind::BSpline),
            other => Err(FdaError::InvalidBasis(format!(
                "unknown basis kind `{other}` (expected fourier or bspline)"
            ))),
        }
    }
}

/// Serialized form of a [`BasisSystem`]; validated on the way in.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BasisSpec {
    kind: BasisKind,
    n_basis: usize,
    domain: Domain,
    order: usize,
    knots: Vec<f64>,
}

/// A finite function basis `{φ_1, …, φ_K}` on a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct BasisSystem {
    kind: BasisKind,
    n_basis: usize,
    domain: Domain,
    order: usize,
    /// Interior knots (B-spline only).
    knots: Vec<f64>,
    /// Clamped knot vector: `lo` and `hi` repeated `order` times around the
    /// interior knots. Empty for Fourier.
    full_knots: Vec<f64>,
}

impl TryFrom<BasisSpec> for BasisSystem {
    type Error = FdaError;

    fn try_from(spec: BasisSpec) -> Result<Self> {
        match spec.kind {
            BasisKind::Fourier => BasisSystem::fourier(spec.n_basis, spec.domain),
            BasisKind::BSpline => {
                let b = BasisSystem::bspline_with_knots(spec.order, spec.domain, spec.knots)?;
                if b.n_basis != spec.n_basis {
                    return Err(FdaError::InvalidBasis(format!(
                        "n_basis {} disagrees with {} interior knots + order {}",
                        spec.n_basis,
                        b.knots.len(),
                        spec.order
                    )));
                }
                Ok(b)
            }
        }
    }
}

impl From<BasisSystem> for BasisSpec {
    fn from(b: BasisSystem) -> Self {
        BasisSpec {
            kind: b.kind,
            n_basis: b.n_basis,
            domain: b.domain,
            order: b.order,
            knots: b.knots,
        }
    }
}

impl BasisSystem {
    /// Orthonormal Fourier system with `n_basis` (odd) functions:
    /// `1/√T`, then `√(2/T)·sin(2πj(t−lo)/T)`, `√(2/T)·cos(2πj(t−lo)/T)` pairs.
    pub fn fourier(n_basis: usize, domain: Domain) -> Result<Self> {
        let domain = Domain::new(domain.lo, domain.hi)?;
        if n_basis == 0 || n_basis % 2 == 0 {
            return Err(FdaError::InvalidBasis(format!(
                "Fourier basis needs an odd number of functions, got {n_basis}"
            )));
        }
        Ok(BasisSystem {
            kind: BasisKind::Fourier,
            n_basis,
            domain,
            order: 0,
            knots: Vec::new(),
            full_knots: Vec::new(),
        })
    }

    /// Clamped B-spline basis with `n_basis` functions of the given order and
    /// `n_basis - order` uniformly spaced interior knots.
    pub fn bspline(n_basis: usize, order: usize, domain: Domain) -> Result<Self> {
        let domain = Domain::new(domain.lo, domain.hi)?;
        if order == 0 {
            return Err(FdaError::InvalidBasis("B-spline order must be positive".into()));
        }
        if n_basis < order {
            return Err(FdaError::InvalidBasis(format!(
                "B-spline with order {order} needs at least {order} functions, got {n_basis}"
            )));
        }
        let n_interior = n_basis - order;
        let step = domain.width() / (n_interior + 1) as f64;
        let knots = (1..=n_interior)
            .map(|i| domain.lo + step * i as f64)
            .collect();
        Self::bspline_with_knots(order, domain, knots)
    }

    /// Clamped B-spline basis with caller-supplied interior knots. The
    /// number of functions is `knots.len() + order`.
    pub fn bspline_with_knots(order: usize, domain: Domain, knots: Vec<f64>) -> Result<Self> {
        let domain = Domain::new(domain.lo, domain.hi)?;
        if order == 0 {
            return Err(FdaError::InvalidBasis("B-spline order must be positive".into()));
        }
        if knots.iter().any(|&k| !(k > domain.lo && k < domain.hi)) {
            return Err(FdaError::InvalidBasis(
                "interior knots must lie strictly inside the domain".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(FdaError::InvalidBasis("interior knots must be nondecreasing".into()));
        }
        let mut full_knots = Vec::with_capacity(knots.len() + 2 * order);
        full_knots.extend(std::iter::repeat_n(domain.lo, order));
        full_knots.extend_from_slice(&knots);
        full_knots.extend(std::iter::repeat_n(domain.hi, order));
        Ok(BasisSystem {
            kind: BasisKind::BSpline,
            n_basis: knots.len() + order,
            domain,
            order,
            knots,
            full_knots,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Number of basis functions `K`.
    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// B-spline order (4 = cubic); 0 for Fourier.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.knots
    }

    /// Writes `(φ_1(t), …, φ_K(t))` into `row`.
    pub fn eval_into(&self, t: f64, row: &mut [f64]) -> Result<()> {
        debug_assert_eq!(row.len(), self.n_basis);
        let t = self.domain.locate(t)?;
        match self.kind {
            BasisKind::Fourier => self.fourier_into(t, row),
            BasisKind::BSpline => {
                row.fill(0.0);
                let span = self.find_span(t);
                let mut local = vec![0.0; self.order];
                self.nonzero_basis(span, t, &mut local);
                let first = span + 1 - self.order;
                row[first..=span].copy_from_slice(&local);
            }
        }
        Ok(())
    }

    /// Basis values at a single point.
    pub fn eval_point(&self, t: f64) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.n_basis];
        self.eval_into(t, &mut row)?;
        Ok(row)
    }

    /// Design matrix with one row per point, in the given order. Unlike
    /// [`evaluate`](Self::evaluate), the points need not be sorted.
    pub fn design_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let mut phi = DMatrix::zeros(points.len(), self.n_basis);
        let mut row = vec![0.0; self.n_basis];
        for (l, &t) in points.iter().enumerate() {
            self.eval_into(t, &mut row)?;
            for (k, v) in row.iter().enumerate() {
                phi[(l, k)] = *v;
            }
        }
        Ok(phi)
    }

    /// Evaluates the basis on a grid: `|grid| × K` matrix `Φ`.
    pub fn evaluate(&self, grid: &EvalGrid) -> Result<DMatrix<f64>> {
        self.design_matrix(grid.points())
    }

    /// Gram matrix `W = ∫ φ(s)ᵀ φ(s) ds`.
    ///
    /// Closed form (identity) for Fourier; for B-splines, Gauss–Legendre with
    /// `order` nodes per knot span, which is exact for the piecewise
    /// polynomial products of degree `2(order − 1)`.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        match self.kind {
            BasisKind::Fourier => DMatrix::identity(self.n_basis, self.n_basis),
            BasisKind::BSpline => self.bspline_gram(),
        }
    }

    fn fourier_into(&self, t: f64, row: &mut [f64]) {
        let width = self.domain.width();
        let x = t - self.domain.lo;
        row[0] = 1.0 / width.sqrt();
        let amp = (2.0 / width).sqrt();
        for j in 1..=(self.n_basis - 1) / 2 {
            let (s, c) = (2.0 * PI * j as f64 * x / width).sin_cos();
            row[2 * j - 1] = amp * s;
            row[2 * j] = amp * c;
        }
    }

    /// Index `s` of the knot span with `U[s] <= t < U[s+1]`; the right end of
    /// the domain belongs to the last nonempty span.
    fn find_span(&self, t: f64) -> usize {
        let u = &self.full_knots;
        let degree = self.order - 1;
        let last = self.n_basis - 1;
        if t >= u[last + 1] {
            return last;
        }
        let (mut low, mut high) = (degree, last + 1);
        let mut mid = (low + high) / 2;
        while t < u[mid] || t >= u[mid + 1] {
            if t < u[mid] {
                high = mid;
            } else {
                low = mid;
            }
            mid = (low + high) / 2;
        }
        mid
    }

    /// The `order` basis functions that are nonzero on span `span`, by the
    /// triangular de Boor scheme.
    fn nonzero_basis(&self, span: usize, t: f64, out: &mut [f64]) {
        let u = &self.full_knots;
        let degree = self.order - 1;
        let mut left = vec![0.0; self.order];
        let mut right = vec![0.0; self.order];
        out[0] = 1.0;
        for j in 1..=degree {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    fn bspline_gram(&self) -> DMatrix<f64> {
        let k = self.n_basis;
        let mut w = DMatrix::zeros(k, k);
        let (nodes, weights) = gauss_legendre(self.order);
        let mut local = vec![0.0; self.order];
        let u = &self.full_knots;
        for span in (self.order - 1)..k {
            let (a, b) = (u[span], u[span + 1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let first = span + 1 - self.order;
            for (x, wq) in nodes.iter().zip(&weights) {
                let t = a + half * (x + 1.0);
                self.nonzero_basis(span, t, &mut local);
                for p in 0..self.order {
                    for q in p..self.order {
                        w[(first + p, first + q)] += half * wq * local[p] * local[q];
                    }
                }
            }
        }
        symmetrize_upper(&mut w);
        w
    }
}

fn symmetrize_upper(w: &mut DMatrix<f64>) {
    for i in 0..w.nrows() {
        for j in 0..i {
            w[(i, j)] = w[(j, i)];
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Strictly increasing, nonempty set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid(Vec<f64>);

impl EvalGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(FdaError::InvalidGrid("grid is empty".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(FdaError::InvalidGrid("grid contains non-finite points".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FdaError::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(EvalGrid(points))
    }

    /// `n` equispaced points from `lo` to `hi` inclusive; a single point is
    /// placed at the midpoint.
    pub fn uniform(domain: Domain, n: usize) -> Result<Self> {
        match n {
            0 => Err(FdaError::InvalidGrid("grid is empty".into())),
            1 => Ok(EvalGrid(vec![domain.midpoint()])),
            _ => {
                let step = domain.width() / (n - 1) as f64;
                let mut pts: Vec<f64> = (0..n).map(|i| domain.lo + step * i as f64).collect();
                pts[n - 1] = domain.hi;
                Ok(EvalGrid(pts))
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Symmetric square root `W^{1/2}` and pseudo-inverse square root `W^{-1/2}`.
///
/// Eigenvalues below `1e-10·λ_max` are treated as zero; anything below
/// `-1e-10·λ_max` is rejected as not positive semi-definite.
pub fn gram_sqrt(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !w.is_square() {
        return Err(FdaError::DimensionMismatch {
            context: "gram_sqrt",
            expected: w.nrows(),
            found: w.ncols(),
        });
    }
    let sym = 0.5 * (w + w.transpose());
    let eig = SymmetricEigen::new(sym);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let floor = 1e-10 * lambda_max;
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -floor) {
        return Err(FdaError::NotPsd(bad));
    }
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let inv_root = eig
        .eigenvalues
        .map(|l| if l > floor && l > 0.0 { 1.0 / l.sqrt() } else { 0.0 });
    let v = &eig.eigenvectors;
    let sqrt = v * DMatrix::from_diagonal(&root) * v.transpose();
    let inv_sqrt = v * DMatrix::from_diagonal(&inv_root) * v.transpose();
    Ok((symmetrize(sqrt), symmetrize(inv_sqrt)))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Domain {
        Domain::new(0.0, 1.0).unwrap()
    }

    /// Textbook recursive Cox–de Boor definition, independent of the
    /// triangular scheme used by the basis.
    fn cox_de_boor(u: &[f64], i: usize, order: usize, t: f64, hi: f64) -> f64 {
        if order == 1 {
            let last_nonempty = u.iter().rposition(|&k| k < hi).unwrap();
            return if (u[i] <= t && t < u[i + 1]) || (t == hi && i == last_nonempty) {
                1.0
            } else {
                0.0
            };
        }
        let mut v = 0.0;
        let d1 = u[i + order - 1] - u[i];
        if d1 > 0.0 {
            v += (t - u[i]) / d1 * cox_de_boor(u, i, order - 1, t, hi);
        }
        let d2 = u[i + order] - u[i + 1];
        if d2 > 0.0 {
            v += (u[i + order] - t) / d2 * cox_de_boor(u, i + 1, order - 1, t, hi);
        }
        v
    }

    #[test]
    fn cubic_bspline_matches_recursive_oracle() {
        let basis = BasisSystem::bspline(9, 4, unit()).unwrap();
        let mut u = vec![0.0; 4];
        u.extend_from_slice(basis.interior_knots());
        u.extend([1.0; 4]);
        let grid = EvalGrid::uniform(unit(), 101).unwrap();
        let phi = basis.evaluate(&grid).unwrap();
        for (l, &t) in grid.points().iter().enumerate() {
            for k in 0..9 {
                let oracle = cox_de_boor(&u, k, 4, t, 1.0);
                assert!((phi[(l, k)] - oracle).abs() < 1e-13, "t={t} k={k}");
            }
        }
    }

    #[test]
    fn fourier_constant_only() {
        let basis = BasisSystem::fourier(1, Domain::new(0.0, 4.0).unwrap()).unwrap();
        let grid = EvalGrid::uniform(basis.domain(), 7).unwrap();
        let phi = basis.evaluate(&grid).unwrap();
        assert!(phi.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn fourier_rejects_even_size() {
        assert!(BasisSystem::fourier(4, unit()).is_err());
        assert!(BasisSystem::fourier(0, unit()).is_err());
    }

    #[test]
    fn bspline_validation() {
        assert!(BasisSystem::bspline(3, 4, unit()).is_err());
        assert!(BasisSystem::bspline_with_knots(4, unit(), vec![0.0, 0.5]).is_err());
        assert!(BasisSystem::bspline_with_knots(4, unit(), vec![0.6, 0.5]).is_err());
        let b = BasisSystem::bspline_with_knots(3, unit(), vec![0.2, 0.5, 0.5]).unwrap();
        assert_eq!(b.n_basis(), 6);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let b = BasisSystem::bspline(6, 4, unit()).unwrap();
        assert!(matches!(b.eval_point(1.5), Err(FdaError::Domain { .. })));
        assert!(matches!(b.eval_point(-1e-6), Err(FdaError::Domain { .. })));
        let f = BasisSystem::fourier(3, unit()).unwrap();
        assert!(f.eval_point(-0.1).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn fourier_gram_is_identity_and_matches_quadrature() {
        let basis = BasisSystem::fourier(7, Domain::new(-1.0, 2.0).unwrap()).unwrap();
        assert_eq!(basis.gram_matrix(), DMatrix::identity(7, 7));
        // Rectangle rule is exact for trigonometric polynomials over a period.
        let m = 400;
        let pts: Vec<f64> = (0..m).map(|i| -1.0 + 3.0 * i as f64 / m as f64).collect();
        let phi = basis.design_matrix(&pts).unwrap();
        let w = phi.transpose() * &phi * (3.0 / m as f64);
        assert!((w - DMatrix::identity(7, 7)).amax() < 1e-12);
    }

    fn trapezoid_gram(basis: &BasisSystem, m: usize) -> DMatrix<f64> {
        let d = basis.domain();
        let grid = EvalGrid::uniform(d, m).unwrap();
        let phi = basis.evaluate(&grid).unwrap();
        let h = d.width() / (m - 1) as f64;
        let mut weights = vec![h; m];
        weights[0] *= 0.5;
        weights[m - 1] *= 0.5;
        let mut w = DMatrix::zeros(basis.n_basis(), basis.n_basis());
        for (l, wl) in weights.iter().enumerate() {
            let row = phi.row(l);
            w += row.transpose() * row * *wl;
        }
        w
    }

    #[test]
    fn cubic_gram_matches_dense_trapezoid() {
        let basis = BasisSystem::bspline(8, 4, unit()).unwrap();
        let exact = basis.gram_matrix();
        let dense = trapezoid_gram(&basis, 100_000);
        assert!((exact - dense).amax() < 1e-8);
    }

    #[test]
    fn gram_sqrt_examples() {
        let (r, ir) = gram_sqrt(&DMatrix::identity(3, 3)).unwrap();
        assert!((r - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!((ir - DMatrix::identity(3, 3)).amax() < 1e-14);

        let w = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0]);
        let (r, ir) = gram_sqrt(&w).unwrap();
        assert!((r - DMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0])).amax() < 1e-14);
        assert!(
            (ir - DMatrix::from_diagonal(&nalgebra::dvector![0.5, 1.0 / 3.0])).amax() < 1e-14
        );

        let bad = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -0.5]);
        assert!(matches!(gram_sqrt(&bad), Err(FdaError::NotPsd(_))));
    }

    #[test]
    fn gram_sqrt_pseudo_inverse_on_singular_matrix() {
        let v = nalgebra::dvector![1.0, 2.0, 2.0] / 3.0;
        let w = &v * v.transpose() * 9.0;
        let (r, ir) = gram_sqrt(&w).unwrap();
        assert!((&r * &r - &w).amax() < 1e-12);
        // W^{-1/2} W W^{-1/2} is the projector onto the range.
        let proj = &ir * &w * &ir;
        assert!((proj - &v * v.transpose()).amax() < 1e-10);
    }

    #[test]
    fn gram_sqrt_random_psd_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let b = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let w = &b * b.transpose();
        let (r, _) = gram_sqrt(&w).unwrap();
        assert!((&r * &r - &w).norm() <= 1e-10 * w.norm());
    }

    #[test]
    fn bspline_gram_is_psd_and_symmetric() {
        let basis = BasisSystem::bspline_with_knots(3, unit(), vec![0.1, 0.4, 0.4, 0.9]).unwrap();
        let w = basis.gram_matrix();
        assert!((&w - w.transpose()).amax() == 0.0);
        let eig = SymmetricEigen::new(w.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-12));
        let dense = trapezoid_gram(&basis, 100_000);
        assert!((w - dense).amax() < 1e-8);
    }

    #[test]
    fn serde_round_trip_validates() {
        let b = BasisSystem::bspline(10, 4, Domain::new(0.0, 365.0).unwrap()).unwrap();
        let json = serde_json::to_string(&b).unwrap();
        let back: BasisSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(b, back);
        let broken = json.replace("\"n_basis\":10", "\"n_basis\":11");
        assert!(serde_json::from_str::<BasisSystem>(&broken).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(EvalGrid::new(vec![]).is_err());
        assert!(EvalGrid::new(vec![0.0, 0.0]).is_err());
        assert!(EvalGrid::new(vec![0.2, 0.1]).is_err());
        assert_eq!(EvalGrid::uniform(unit(), 1).unwrap().points(), &[0.5]);
    }

    fn arb_bspline() -> impl Strategy<Value = BasisSystem> {
        (1usize..6, prop::collection::vec(0.01f64..0.99, 0..8)).prop_map(|(order, mut knots)| {
            knots.sort_by(f64::total_cmp);
            BasisSystem::bspline_with_knots(order, Domain::new(0.0, 1.0).unwrap(), knots).unwrap()
        })
    }

    proptest! {
        #[test]
        fn partition_of_unity(basis in arb_bspline(), t in 0.0f64..=1.0) {
            let s: f64 = basis.eval_point(t).unwrap().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn evaluation_is_linear(
            basis in arb_bspline(),
            seed in any::<u64>(),
            t in 0.0f64..=1.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..basis.n_basis()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let grid = EvalGrid::new(vec![t]).unwrap();
            let phi = basis.evaluate(&grid).unwrap();
            let via_matrix = (phi * nalgebra::DVector::from_vec(a.clone()))[0];
            let pointwise: f64 = basis.eval_point(t).unwrap().iter().zip(&a).map(|(p, a)| p * a).sum();
            prop_assert!((via_matrix - pointwise).abs() < 1e-12);
        }
    }
}
