//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the PSD
//! square root built on it.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Sweep limit for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius norm, relative to the full norm, at which the
/// iteration stops.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Inputs whose asymmetry exceeds this (relative to `max(1, max|a_ij|)`) are
/// rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `A = Q diag(values) Qᵀ` with eigenvalues sorted in descending order and the
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// Index of the eigenvalue largest in magnitude; the first such index on ties.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = k;
            }
        }
        best
    }

    /// Reassembles `Q diag(w) Qᵀ` for replacement eigenvalues `w`.
    pub fn reassemble(&self, w: &[f64]) -> Matrix {
        let d = self.values.len();
        let q = &self.vectors;
        let mut out = Matrix::zeros(d, d);
        for k in 0..d {
            if w[k] == 0.0 {
                continue;
            }
            for r in 0..d {
                let qr = q[(r, k)] * w[k];
                if qr == 0.0 {
                    continue;
                }
                for s in r..d {
                    out[(r, s)] += qr * q[(s, k)];
                }
            }
        }
        for r in 0..d {
            for s in 0..r {
                out[(r, s)] = out[(s, r)];
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let d = a.rows();
    let mut acc = 0.0;
    for p in 0..d {
        for q in (p + 1)..d {
            acc += 2.0 * a[(p, q)] * a[(p, q)];
        }
    }
    libm::sqrt(acc)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(input: &Matrix) -> Result<SymmetricEigen> {
    if !input.is_square() {
        return Err(Error::DimensionMismatch { expected: input.rows(), found: input.cols() });
    }
    if !input.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let asym = input.asymmetry();
    if asym > SYMMETRY_TOL * input.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    let d = input.rows();
    let mut a = input.clone();
    a.symmetrize();
    let mut v = Matrix::identity(d);
    let scale = a.frobenius_norm();

    let mut converged = scale == 0.0;
    let mut sweep = 0;
    while !converged {
        if off_diagonal_norm(&a) <= OFF_DIAGONAL_TOL * scale {
            converged = true;
            break;
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        sweep += 1;
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..d {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SymmetricEigen { vectors, values })
}

/// Eigenvalues below this are treated as a failed PSD check.
pub const PSD_TOL: f64 = 1e-10;

/// Symmetric square root `Q diag(√λ) Qᵀ` of a PSD matrix. Eigenvalues in
/// `[-PSD_TOL, 0)` are clamped to zero.
pub fn psd_sqrt(a: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(a)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    let roots: Vec<f64> = eig.values.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    Ok(eig.reassemble(&roots))
}
