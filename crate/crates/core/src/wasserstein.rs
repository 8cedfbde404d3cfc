//! Univariate squared 2-Wasserstein distance and the projected objective
//! `J(β) = W₂²(βᵀX, βᵀY)` with its gradient.
//!
//! In one dimension the optimal coupling of two empirical measures is the
//! monotone one: sort both samples and walk the two uniform weight sequences
//! in the northwest-corner pattern. Nothing here ever builds an `n × m`
//! matching matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, symmetric_eigen, PSD_TOL};
use crate::matrix::Matrix;
use crate::samples::{needs_sign_flip, project, SampleSet};

/// One cell of a coupling: mass `weight` moved from `x[i]` to `y[j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Sparse transport plan between `n` and `m` uniformly weighted points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileCoupling {
    pub n: usize,
    pub m: usize,
    pub entries: Vec<CouplingEntry>,
}

impl QuantileCoupling {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for e in &self.entries {
            s[e.i] += e.weight;
        }
        s
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.m];
        for e in &self.entries {
            s[e.j] += e.weight;
        }
        s
    }
}

/// Walks the northwest-corner coupling of `n` masses `1/n` against `m`
/// masses `1/m`, in integer units of `1/(nm)`.
#[derive(Debug, Clone)]
pub(crate) struct NorthWest {
    n: usize,
    m: usize,
    i: usize,
    j: usize,
    rem_x: usize,
    rem_y: usize,
}

impl NorthWest {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        Self { n, m, i: 0, j: 0, rem_x: m, rem_y: n }
    }
}

impl Iterator for NorthWest {
    /// `(rank in x, rank in y, units)`
    type Item = (usize, usize, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.i >= self.n || self.j >= self.m {
            return None;
        }
        let w = self.rem_x.min(self.rem_y);
        let item = (self.i, self.j, w);
        self.rem_x -= w;
        self.rem_y -= w;
        if self.rem_x == 0 {
            self.i += 1;
            self.rem_x = self.m;
        }
        if self.rem_y == 0 {
            self.j += 1;
            self.rem_y = self.n;
        }
        Some(item)
    }
}

#[inline]
fn unit_weight(n: usize, m: usize) -> f64 {
    1.0 / (n as f64 * m as f64)
}

/// Monotone coupling over sorted ranks: rank `i` of the first sample is
/// paired with rank `j` of the second.
pub fn quantile_coupling(n: usize, m: usize) -> Result<QuantileCoupling> {
    if n == 0 || m == 0 {
        return Err(Error::Empty("coupling needs at least one point per side"));
    }
    let unit = unit_weight(n, m);
    let entries = NorthWest::new(n, m)
        .map(|(i, j, w)| CouplingEntry { i, j, weight: w as f64 * unit })
        .collect();
    Ok(QuantileCoupling { n, m, entries })
}

/// Indices that sort `values` ascending; equal values keep index order.
pub(crate) fn sort_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty(what));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// `Σ w (x_i − y_j)²` over the monotone coupling of the ordered values.
pub(crate) fn coupled_cost(xs: &[f64], x_order: &[usize], ys: &[f64], y_order: &[usize]) -> f64 {
    let unit = unit_weight(xs.len(), ys.len());
    let mut acc = 0.0;
    for (i, j, w) in NorthWest::new(xs.len(), ys.len()) {
        let diff = xs[x_order[i]] - ys[y_order[j]];
        acc += w as f64 * unit * diff * diff;
    }
    acc
}

/// Squared 2-Wasserstein distance between the empirical distributions of
/// `xs` and `ys`.
pub fn wasserstein1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_finite(xs, "first sample")?;
    check_finite(ys, "second sample")?;
    let xo = sort_order(xs);
    let yo = sort_order(ys);
    Ok(coupled_cost(xs, &xo, ys, &yo))
}

fn check_dims(x: &SampleSet, y: &SampleSet, beta: &[f64]) -> Result<()> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: y.d() });
    }
    if beta.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: beta.len() });
    }
    Ok(())
}

/// `beta` with the canonical sign applied, plus whether it was flipped.
pub(crate) fn canonical_direction(beta: &[f64]) -> (Vec<f64>, bool) {
    if needs_sign_flip(beta) {
        (beta.iter().map(|c| -c).collect(), true)
    } else {
        (beta.to_vec(), false)
    }
}

/// `J(β)`: squared Wasserstein distance between the projected samples.
///
/// `beta` need not be normalized. `J(−β) = J(β)` holds bit for bit.
pub fn objective(x: &SampleSet, y: &SampleSet, beta: &[f64]) -> Result<f64> {
    check_dims(x, y, beta)?;
    let (beta, _) = canonical_direction(beta);
    let px = project(x, &beta)?;
    let py = project(y, &beta)?;
    let xo = sort_order(&px);
    let yo = sort_order(&py);
    Ok(coupled_cost(&px, &xo, &py, &yo))
}

/// Projections and sort orders at a (canonically signed) direction.
pub(crate) struct Projected {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
}

impl Projected {
    pub(crate) fn new(x: &SampleSet, y: &SampleSet, beta: &[f64]) -> Result<Self> {
        Ok(Self { px: project(x, beta)?, py: project(y, beta)? })
    }
}

/// `2 Σ w (βᵀz_ij) z_ij` with `z_ij = x_i − y_j` over the monotone coupling.
pub(crate) fn gradient_from_orders(
    x: &SampleSet,
    y: &SampleSet,
    proj: &Projected,
    x_order: &[usize],
    y_order: &[usize],
) -> Vec<f64> {
    let d = x.d();
    let (n, m) = (x.n(), y.n());
    let unit = unit_weight(n, m);
    let mut g = vec![0.0; d];
    for (i, j, w) in NorthWest::new(n, m) {
        let (xi, yj) = (x_order[i], y_order[j]);
        let scale = 2.0 * w as f64 * unit * (proj.px[xi] - proj.py[yj]);
        for ((gk, a), b) in g.iter_mut().zip(x.row(xi)).zip(y.row(yj)) {
            *gk += scale * (a - b);
        }
    }
    g
}

/// Gradient of `J` at `beta`.
///
/// Where projected values tie, the stable sort picks the coupling and the
/// result is a subgradient for that coupling.
pub fn gradient(x: &SampleSet, y: &SampleSet, beta: &[f64]) -> Result<Vec<f64>> {
    check_dims(x, y, beta)?;
    let (canon, flipped) = canonical_direction(beta);
    let proj = Projected::new(x, y, &canon)?;
    let xo = sort_order(&proj.px);
    let yo = sort_order(&proj.py);
    let mut g = gradient_from_orders(x, y, &proj, &xo, &yo);
    if flipped {
        g.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(g)
}

/// Symmetry tolerance for Gaussian covariances.
pub const COVARIANCE_SYMMETRY_TOL: f64 = 1e-12;

/// A multivariate normal `N(mean, covariance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    covariance: Matrix,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Empty("gaussian mean"));
        }
        if covariance.rows() != d || covariance.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.rows() });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian mean"));
        }
        let asym = covariance.asymmetry();
        if asym > COVARIANCE_SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let eig = symmetric_eigen(&covariance)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(Self { mean, covariance })
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, Matrix::diagonal(&vec![variance; d]))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }
}

/// `‖μ_X − μ_Y‖² + ‖Σ_X^{1/2} − Σ_Y^{1/2}‖_F²`.
///
/// This equals the squared Wasserstein distance between the two normals only
/// when the covariances commute; for non-commuting covariances the exact
/// value involves the cross term `(Σ_Y^{1/2} Σ_X Σ_Y^{1/2})^{1/2}` instead.
pub fn gaussian_wasserstein(gx: &GaussianSpec, gy: &GaussianSpec) -> Result<f64> {
    if gx.dim() != gy.dim() {
        return Err(Error::DimensionMismatch { expected: gx.dim(), found: gy.dim() });
    }
    let mean_term: f64 = gx.mean.iter().zip(&gy.mean).map(|(a, b)| (a - b) * (a - b)).sum();
    let mut diff = psd_sqrt(&gx.covariance)?;
    diff.add_scaled(-1.0, &psd_sqrt(&gy.covariance)?);
    let f = diff.frobenius_norm();
    Ok(mean_term + f * f)
}
