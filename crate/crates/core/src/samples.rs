use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, Matrix};

/// One population: `n` observations of `d` features, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Matrix,
}

impl SampleSet {
    pub fn from_matrix(data: Matrix) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::Empty("sample set has no rows"));
        }
        if data.cols() == 0 {
            return Err(Error::Empty("sample set has no features"));
        }
        if !data.is_finite() {
            return Err(Error::NonFinite("sample set"));
        }
        Ok(Self { data })
    }

    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_matrix(Matrix::from_vec(n, d, values)?)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.data.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.d();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), d, values)
    }

    /// Stacks `other` below `self`.
    pub fn concat(&self, other: &SampleSet) -> Result<Self> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), found: other.d() });
        }
        let mut values = Vec::with_capacity((self.n() + other.n()) * self.d());
        values.extend_from_slice(self.data.as_slice());
        values.extend_from_slice(other.data.as_slice());
        Self::new(self.n() + other.n(), self.d(), values)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = alloc::vec![0.0; self.d()];
        for r in self.rows() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.n() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Unbiased per-feature variances (zero when `n == 1`).
    pub fn column_variances(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut vars = alloc::vec![0.0; self.d()];
        for r in self.rows() {
            for ((v, m), x) in vars.iter_mut().zip(&means).zip(r) {
                *v += (x - m) * (x - m);
            }
        }
        let denom = (self.n().max(2) - 1) as f64;
        vars.iter_mut().for_each(|v| *v /= denom);
        vars
    }
}

/// Norm slack allowed above the unit ball.
pub const BALL_TOL: f64 = 1e-9;

/// A direction in the unit half-ball: `‖β‖₂ ≤ 1` and first nonzero
/// coordinate nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector(Vec<f64>);

impl ProjectionVector {
    /// Validates the norm bound and applies the canonical sign.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("projection vector"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("projection vector"));
        }
        let norm = norm2(&coords);
        if norm > 1.0 + BALL_TOL {
            return Err(Error::OutsideUnitBall(norm));
        }
        canonicalize_sign(&mut coords);
        Ok(Self(coords))
    }

    /// Rescales a nonzero vector to unit length, then applies the canonical sign.
    pub fn unit(mut coords: Vec<f64>) -> Result<Self> {
        let norm = norm2(&coords);
        if !norm.is_finite() {
            return Err(Error::NonFinite("projection vector"));
        }
        if norm == 0.0 {
            return Err(Error::DegenerateProjection);
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Self::new(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(alloc::vec![0.0; d])
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = alloc::vec![0.0; d];
        v[k] = 1.0;
        Self(v)
    }

    pub(crate) fn from_canonical(coords: Vec<f64>) -> Self {
        debug_assert!(norm2(&coords) <= 1.0 + BALL_TOL);
        Self(coords)
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Number of coordinates with magnitude above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.0.iter().filter(|c| c.abs() > threshold).count()
    }

    /// Feature indices ordered by decreasing `|weight|` (ties by index).
    pub fn ranked_features(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].abs().total_cmp(&self.0[a].abs()));
        idx
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProjectionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// True when the first nonzero coordinate is negative.
pub fn needs_sign_flip(v: &[f64]) -> bool {
    v.iter().find(|&&c| c != 0.0).is_some_and(|&c| c < 0.0)
}

/// Negates `v` in place if its first nonzero coordinate is negative.
pub fn canonicalize_sign(v: &mut [f64]) {
    if needs_sign_flip(v) {
        v.iter_mut().for_each(|c| *c = -*c);
    }
}

/// `⟨row_i, beta⟩` for every row.
pub fn project(samples: &SampleSet, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != samples.d() {
        return Err(Error::DimensionMismatch { expected: samples.d(), found: beta.len() });
    }
    Ok(samples.rows().map(|r| dot(r, beta)).collect())
}
