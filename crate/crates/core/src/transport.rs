//! Exact discrete transport between uniformly weighted point sets.
//!
//! Each of the `n` sources is split into `L/n` unit copies and each of the
//! `m` targets into `L/m`, with `L = lcm(n, m)`. The transport LP has an
//! integral optimum, so it reduces to an `L × L` assignment problem solved by
//! the Hungarian method. Intended for test-scale problems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest replicated problem size accepted.
pub const MAX_REPLICATED: usize = 1024;

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Minimum-cost perfect matching of a square cost matrix. Returns the total
/// cost and `assignment[row] = column`.
pub fn min_cost_assignment(cost: &Matrix) -> Result<(f64, Vec<usize>)> {
    if !cost.is_square() {
        return Err(Error::DimensionMismatch { expected: cost.rows(), found: cost.cols() });
    }
    let n = cost.rows();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    // Potentials-based Hungarian algorithm, 1-indexed with a sentinel column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok((total, assignment))
}

/// `min_M Σ M_ij c_ij` over couplings with row sums `1/n` and column sums `1/m`.
pub fn uniform_transport_cost(costs: &Matrix) -> Result<f64> {
    let (n, m) = (costs.rows(), costs.cols());
    if n == 0 || m == 0 {
        return Err(Error::Empty("transport cost matrix"));
    }
    if !costs.is_finite() {
        return Err(Error::NonFinite("transport cost matrix"));
    }
    let l = n / gcd(n, m) * m;
    if l > MAX_REPLICATED {
        return Err(Error::TransportTooLarge(l));
    }
    let (rx, ry) = (l / n, l / m);
    let mut big = Matrix::zeros(l, l);
    for a in 0..l {
        for b in 0..l {
            big[(a, b)] = costs[(a / rx, b / ry)];
        }
    }
    let (total, _) = min_cost_assignment(&big)?;
    Ok(total / l as f64)
}
