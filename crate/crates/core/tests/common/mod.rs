//! Reference computations that share no code with the crate under test.

#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparda_core::{Matrix, SampleSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn uniform_samples(rng: &mut impl Rng, n: usize, d: usize, lo: f64, hi: f64) -> SampleSet {
    SampleSet::new(n, d, uniform_vec(rng, n * d, lo, hi)).unwrap()
}

/// Optimal transport cost between uniform weights `1/n` and `1/m`, by simplex.
pub fn lp_transport(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let m = cost[0].len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect())
        .collect();
    for row in &vars {
        let terms: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, 1.0 / n as f64);
    }
    for j in 0..m {
        let terms: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        problem.add_constraint(&terms, ComparisonOp::Eq, 1.0 / m as f64);
    }
    problem.solve().expect("transport LP is feasible").objective()
}

pub fn lp_wasserstein(xs: &[f64], ys: &[f64]) -> f64 {
    let cost: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| (x - y) * (x - y)).collect()).collect();
    lp_transport(&cost)
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k - 1 {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
        heap(k - 1, a, out);
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// `min_σ (1/n) Σ_i cost[i][σ(i)]` with the minimizing permutation.
pub fn best_permutation(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    permutations(n)
        .into_iter()
        .map(|p| ((0..n).map(|i| cost[i][p[i]]).sum::<f64>() / n as f64, p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

fn diff(x: &SampleSet, y: &SampleSet, i: usize, j: usize) -> Vec<f64> {
    x.row(i).iter().zip(y.row(j)).map(|(a, b)| a - b).collect()
}

/// `z_ijᵀ B z_ij` for every pair.
pub fn pair_costs(b: &[Vec<f64>], x: &SampleSet, y: &SampleSet) -> Vec<Vec<f64>> {
    (0..x.n())
        .map(|i| {
            (0..y.n())
                .map(|j| {
                    let z = diff(x, y, i, j);
                    let mut s = 0.0;
                    for r in 0..z.len() {
                        for c in 0..z.len() {
                            s += z[r] * b[r][c] * z[c];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// `W_M = (1/n) Σ_i z_iσ(i) z_iσ(i)ᵀ` for the matching that is optimal along `beta`
/// (equal sample sizes), found by enumeration.
pub fn dense_wm(x: &SampleSet, y: &SampleSet, beta: &[f64]) -> Vec<Vec<f64>> {
    let bb: Vec<Vec<f64>> = beta.iter().map(|a| beta.iter().map(|b| a * b).collect()).collect();
    let (_, perm) = best_permutation(&pair_costs(&bb, x, y));
    let d = x.d();
    let n = x.n();
    let mut w = vec![vec![0.0; d]; d];
    for (i, &j) in perm.iter().enumerate() {
        let z = diff(x, y, i, j);
        for r in 0..d {
            for c in 0..d {
                w[r][c] += z[r] * z[c] / n as f64;
            }
        }
    }
    w
}

pub fn quadratic(w: &[Vec<f64>], beta: &[f64]) -> f64 {
    let mut s = 0.0;
    for r in 0..beta.len() {
        for c in 0..beta.len() {
            s += beta[r] * w[r][c] * beta[c];
        }
    }
    s
}

pub fn to_nalgebra(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)])
}

fn clip_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn onto_trace_one(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = a.nrows();
    let shift = (1.0 - a.trace()) / d as f64;
    a + DMatrix::identity(d, d) * shift
}

/// Frobenius projection onto `{B ⪰ 0, tr B = 1}` by Dykstra's alternating
/// projections between the PSD cone and the trace-one hyperplane.
pub fn dykstra_projection(a: &Matrix) -> DMatrix<f64> {
    let target = to_nalgebra(a);
    let d = target.nrows();
    let mut x = target.clone();
    let mut p = DMatrix::zeros(d, d);
    let mut q = DMatrix::zeros(d, d);
    for _ in 0..200_000 {
        let y = onto_trace_one(&(&x + &p));
        p = &x + &p - &y;
        let next = clip_psd(&(&y + &q));
        q = &y + &q - &next;
        let change = (&next - &x).abs().max();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    x
}

/// Central differences of `f` at `beta` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, beta: &[f64], h: f64) -> Vec<f64> {
    (0..beta.len())
        .map(|k| {
            let mut plus = beta.to_vec();
            let mut minus = beta.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Indices sorting `values` ascending, ties by index.
pub fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

pub fn projected(s: &SampleSet, beta: &[f64]) -> Vec<f64> {
    (0..s.n()).map(|i| s.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()).collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
