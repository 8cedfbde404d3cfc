//! Semidefinite relaxation of the divergence-maximizing projection.
//!
//! The relaxed problem is `max_{B ∈ 𝓑_r} min_M tr(W_M B) − λ‖B‖₁` over the
//! trace-one PSD cone `𝓑_r`. The inner transport problem is replaced by its
//! penalized LP dual
//!
//! ```text
//! g(B, u, v) = (1/m) Σ_ij min{0, z_ijᵀ B z_ij − u_i − v_j} + (1/n) Σ u_i + (1/m) Σ v_j
//! ```
//!
//! which is maximized jointly over `(B, u, v)` by projected supergradient
//! ascent. Because every coupling entry is at most `1/m`, the `1/m` penalty
//! weight makes `max_{u,v} g` equal the transport optimum exactly.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::{dot, Matrix};
use crate::samples::{ProjectionVector, SampleSet};
use crate::transport::uniform_transport_cost;

/// Trace and eigenvalue tolerance for feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// A symmetric matrix produced by [`project_to_feasible`]: trace one and PSD
/// up to rounding, unless soft-thresholding moved it off the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOneMatrix(Matrix);

impl TraceOneMatrix {
    /// Validates membership in the trace-one PSD cone.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let eig = symmetric_eigen(&m)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -FEASIBILITY_TOL {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        if (m.trace() - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::InvalidParameter("trace must equal one"));
        }
        let mut m = m;
        m.symmetrize();
        Ok(Self(m))
    }

    /// `ββᵀ / ‖β‖²`.
    pub fn rank_one(beta: &[f64]) -> Result<Self> {
        let nn = dot(beta, beta);
        if nn == 0.0 {
            return Err(Error::DegenerateProjection);
        }
        let mut m = Matrix::outer(beta);
        m.scale(1.0 / nn);
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Unit eigenvector of the eigenvalue largest in magnitude, canonically signed.
    pub fn dominant_direction(&self) -> Result<ProjectionVector> {
        let eig = symmetric_eigen(&self.0)?;
        ProjectionVector::unit(eig.vector(eig.dominant_index()))
    }
}

/// Dual variables of the transport LP, one per sample of each population.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl DualPair {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { u: vec![0.0; n], v: vec![0.0; m] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxConfig {
    /// ℓ₁ penalty on `B`.
    pub lambda: f64,
    /// Normalized step length for `B`.
    pub gamma: f64,
    /// Initial dual step; the `t`-th dual update uses `eta / √t`, in the units
    /// chosen by `dual_scale`.
    pub eta: f64,
    pub dual_scale: DualScale,
    /// Iterations without improvement of the tracked objective before stopping.
    pub patience: usize,
    pub max_iter: usize,
    /// Dual updates per `B` update (the last one shares the `B` supergradient).
    pub dual_steps_per_b: usize,
    /// Dual-only updates at the starting `B` before the first `B` update.
    pub dual_warmup: usize,
    pub b_supergradient: BSupergradient,
    /// Sample this many random `(i, j)` pairs per step instead of all `n·m`.
    pub incremental_batch: Option<usize>,
    pub seed: u64,
    /// Record `matching_value(B) − λ‖B‖₁` every this many iterations.
    pub diagnostics_every: Option<usize>,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma: 0.1,
            eta: 0.05,
            dual_scale: DualScale::Relative,
            patience: 50,
            max_iter: 2000,
            dual_steps_per_b: 5,
            dual_warmup: 100,
            b_supergradient: BSupergradient::PassAverage,
            incremental_batch: None,
            seed: 0,
            diagnostics_every: None,
        }
    }
}

/// Which supergradient drives the `B` update of an outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BSupergradient {
    /// The one from the final dual pass, shared with the joint dual update.
    LastPass,
    /// The mean over all dual passes made at the current `B`. Near a dual
    /// optimum the active set flickers from pass to pass; the mean then
    /// approaches `W_M` of an optimal coupling instead of an arbitrary vertex.
    PassAverage,
}

/// Units of the dual step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualScale {
    /// `u ← u + η_t ∂u` literally.
    Absolute,
    /// `η` is multiplied by `n · c̄₀`, the sample count of the larger
    /// population times the mean pair cost at the starting `B`. Coordinates of
    /// `∂u` are `O(1/n)` while the optimal duals are `O(c̄)`, so this makes the
    /// step size independent of sample size and data scale.
    Relative,
}

impl RelaxConfig {
    /// Dual step actually applied for problem size `n` and mean starting cost.
    pub fn effective_eta(&self, n: usize, mean_cost: f64) -> f64 {
        match self.dual_scale {
            DualScale::Absolute => self.eta,
            DualScale::Relative => {
                let scale = if mean_cost > 0.0 && mean_cost.is_finite() { mean_cost } else { 1.0 };
                self.eta * n as f64 * scale
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be finite and nonnegative"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be positive"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("eta must be positive"));
        }
        if self.patience == 0 || self.max_iter == 0 || self.dual_steps_per_b == 0 {
            return Err(Error::InvalidParameter("patience, max_iter and dual_steps_per_b must be positive"));
        }
        if self.incremental_batch == Some(0) {
            return Err(Error::InvalidParameter("incremental batch must be positive"));
        }
        if self.diagnostics_every == Some(0) {
            return Err(Error::InvalidParameter("diagnostics interval must be positive"));
        }
        Ok(())
    }
}

fn check_pair(x: &SampleSet, y: &SampleSet) -> Result<()> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: y.d() });
    }
    Ok(())
}

fn check_state(b: &Matrix, duals: &DualPair, x: &SampleSet, y: &SampleSet) -> Result<()> {
    check_pair(x, y)?;
    if b.rows() != x.d() || b.cols() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: b.rows() });
    }
    if duals.u.len() != x.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), found: duals.u.len() });
    }
    if duals.v.len() != y.n() {
        return Err(Error::DimensionMismatch { expected: y.n(), found: duals.v.len() });
    }
    Ok(())
}

/// `c_ij = z_ijᵀ B z_ij`, row-major over `(i, j)`.
///
/// Expanded as `x_iᵀBx_i + y_jᵀBy_j − 2 (Bx_i)ᵀy_j` so each entry costs `O(d)`.
#[derive(Debug, Clone)]
pub struct PairCosts {
    n: usize,
    m: usize,
    c: Vec<f64>,
}

/// `B v` for symmetric `B`, summed as rows scaled by the entries of `v`.
fn symmetric_apply(b: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (k, &a) in v.iter().enumerate() {
        for (o, &bk) in out.iter_mut().zip(b.row(k)) {
            *o += a * bk;
        }
    }
    out
}

impl PairCosts {
    pub fn new(b: &Matrix, x: &SampleSet, y: &SampleSet) -> Result<Self> {
        check_pair(x, y)?;
        if b.rows() != x.d() || b.cols() != x.d() {
            return Err(Error::DimensionMismatch { expected: x.d(), found: b.rows() });
        }
        let (n, m) = (x.n(), y.n());
        let bx: Vec<Vec<f64>> = x.rows().map(|r| symmetric_apply(b, r)).collect();
        let qx: Vec<f64> = x.rows().zip(&bx).map(|(r, br)| dot(r, br)).collect();
        let qy: Vec<f64> = y.rows().map(|r| dot(r, &symmetric_apply(b, r))).collect();
        // cross term (BX)Yᵀ accumulated feature by feature over contiguous rows
        let d = x.d();
        let mut yt = vec![0.0; d * m];
        for (j, row) in y.rows().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                yt[k * m + j] = v;
            }
        }
        let mut c = vec![0.0; n * m];
        for (i, out) in c.chunks_exact_mut(m).enumerate() {
            for (k, &a) in bx[i].iter().enumerate() {
                for (o, &yv) in out.iter_mut().zip(&yt[k * m..(k + 1) * m]) {
                    *o += a * yv;
                }
            }
            for (o, &q) in out.iter_mut().zip(&qy) {
                *o = qx[i] + q - 2.0 * *o;
            }
        }
        Ok(Self { n, m, c })
    }

    pub fn mean(&self) -> f64 {
        self.c.iter().sum::<f64>() / self.c.len() as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.m + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(self.n, self.m, self.c.clone()).expect("sizes agree")
    }
}

/// A supergradient of `g` at `(B, u, v)` together with `g` itself.
#[derive(Debug, Clone)]
pub struct Supergradient {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    /// `None` when only the dual part was requested.
    pub db: Option<Matrix>,
    /// `g(B, u, v)` without the ℓ₁ penalty.
    pub dual_value: f64,
    /// Number of pairs (or weighted draws) with a negative slack.
    pub active: usize,
}

/// Accumulates `Σ w z_ij z_ijᵀ` over active pairs without touching `d × d`
/// per pair: only the row and column weights and `Σ_j w_ij y_j` are kept.
struct BAccumulator {
    row_w: Vec<f64>,
    col_w: Vec<f64>,
    /// Row `i` holds `Σ_j w_ij y_j`.
    ay: Matrix,
}

impl BAccumulator {
    fn new(n: usize, m: usize, d: usize) -> Self {
        Self { row_w: vec![0.0; n], col_w: vec![0.0; m], ay: Matrix::zeros(n, d) }
    }

    #[inline]
    fn push(&mut self, i: usize, j: usize, w: f64, y: &SampleSet) {
        self.row_w[i] += w;
        self.col_w[j] += w;
        for (a, b) in self.ay.row_mut(i).iter_mut().zip(y.row(j)) {
            *a += w * b;
        }
    }

    fn finish(&self, x: &SampleSet, y: &SampleSet, scale: f64) -> Matrix {
        let d = x.d();
        let mut db = Matrix::zeros(d, d);
        for (i, xi) in x.rows().enumerate() {
            let w = self.row_w[i];
            if w == 0.0 {
                continue;
            }
            let ai = self.ay.row(i);
            for r in 0..d {
                for s in 0..d {
                    db[(r, s)] += w * xi[r] * xi[s] - xi[r] * ai[s] - ai[r] * xi[s];
                }
            }
        }
        for (j, yj) in y.rows().enumerate() {
            let w = self.col_w[j];
            if w == 0.0 {
                continue;
            }
            for r in 0..d {
                for s in 0..d {
                    db[(r, s)] += w * yj[r] * yj[s];
                }
            }
        }
        db.symmetrize();
        if scale != 1.0 {
            db.scale(scale);
        }
        db
    }
}

/// Dual part of a supergradient plus, optionally, the `B` part.
struct Accumulator {
    du: Vec<f64>,
    dv: Vec<f64>,
    active: usize,
}

impl Accumulator {
    fn new(n: usize, m: usize) -> Self {
        Self { du: vec![1.0 / n as f64; n], dv: vec![1.0 / m as f64; m], active: 0 }
    }

    /// Records an active pair carrying weight `w` (in units of `1/m`).
    #[inline]
    fn push(&mut self, i: usize, j: usize, w: f64, inv_m: f64, y: &SampleSet, db: Option<&mut BAccumulator>) {
        let step = w * inv_m;
        self.du[i] -= step;
        self.dv[j] -= step;
        self.active += 1;
        if let Some(db) = db {
            db.push(i, j, step, y);
        }
    }

    fn finish(self, db: Option<Matrix>, dual_value: f64) -> Supergradient {
        Supergradient { du: self.du, dv: self.dv, db, dual_value, active: self.active }
    }
}

fn dual_linear_part(duals: &DualPair) -> f64 {
    let n = duals.u.len() as f64;
    let m = duals.v.len() as f64;
    duals.u.iter().sum::<f64>() / n + duals.v.iter().sum::<f64>() / m
}

/// Full supergradient over all `n·m` pairs, using precomputed costs.
pub fn supergradient(
    costs: &PairCosts,
    duals: &DualPair,
    x: &SampleSet,
    y: &SampleSet,
    need_db: bool,
) -> Supergradient {
    if need_db {
        let mut acc = BAccumulator::new(x.n(), y.n(), x.d());
        let mut sg = full_pass(costs, duals, y, Some(&mut acc));
        sg.db = Some(acc.finish(x, y, 1.0));
        sg
    } else {
        full_pass(costs, duals, y, None)
    }
}

/// One sweep over all pairs. Active pairs are added to `db` when given; the
/// returned supergradient never carries a `B` part itself.
fn full_pass(costs: &PairCosts, duals: &DualPair, y: &SampleSet, db: Option<&mut BAccumulator>) -> Supergradient {
    let (n, m) = (costs.n, costs.m);
    let inv_m = 1.0 / m as f64;
    if let Some(db) = db {
        let mut acc = Accumulator::new(n, m);
        let mut min_sum = 0.0;
        for i in 0..n {
            let ui = duals.u[i];
            for j in 0..m {
                let slack = costs.get(i, j) - ui - duals.v[j];
                if slack < 0.0 {
                    min_sum += slack;
                    acc.push(i, j, 1.0, inv_m, y, Some(&mut *db));
                }
            }
        }
        let value = min_sum * inv_m + dual_linear_part(duals);
        return acc.finish(None, value);
    }

    // dual-only pass: count active pairs per row and column without branching
    let mut col_count = vec![0u32; m];
    let mut du = vec![0.0; n];
    let mut min_sum = 0.0;
    let mut active = 0usize;
    for i in 0..n {
        let ui = duals.u[i];
        let row = &costs.c[i * m..(i + 1) * m];
        let mut row_count = 0u32;
        let mut row_sum = 0.0;
        for ((&c, &vj), cnt) in row.iter().zip(&duals.v).zip(col_count.iter_mut()) {
            let slack = c - ui - vj;
            let hit = (slack < 0.0) as u32;
            row_sum += slack.min(0.0);
            row_count += hit;
            *cnt += hit;
        }
        min_sum += row_sum;
        active += row_count as usize;
        du[i] = 1.0 / n as f64 - row_count as f64 * inv_m;
    }
    let dv = col_count.iter().map(|&c| inv_m - c as f64 * inv_m).collect();
    let value = min_sum * inv_m + dual_linear_part(duals);
    Supergradient { du, dv, db: None, dual_value: value, active }
}

/// Supergradient estimate from the listed pairs, each counted with `weight`.
///
/// With every pair listed once and `weight = 1` this reproduces
/// [`supergradient`] up to summation order. The returned `dual_value` is
/// the matching estimate of `g`.
pub fn supergradient_from_pairs(
    b: &Matrix,
    duals: &DualPair,
    x: &SampleSet,
    y: &SampleSet,
    pairs: &[(usize, usize)],
    weight: f64,
) -> Result<Supergradient> {
    check_state(b, duals, x, y)?;
    let (n, m, d) = (x.n(), y.n(), x.d());
    let inv_m = 1.0 / m as f64;
    let mut acc = Accumulator::new(n, m);
    let mut db = BAccumulator::new(n, m, d);
    let mut min_sum = 0.0;
    let mut z = vec![0.0; d];
    for &(i, j) in pairs {
        if i >= n || j >= m {
            return Err(Error::InvalidParameter("pair index out of range"));
        }
        for ((zk, a), c) in z.iter_mut().zip(x.row(i)).zip(y.row(j)) {
            *zk = a - c;
        }
        let slack = b.quadratic_form(&z) - duals.u[i] - duals.v[j];
        if slack < 0.0 {
            min_sum += weight * slack;
            acc.push(i, j, weight, inv_m, y, Some(&mut db));
        }
    }
    let value = min_sum * inv_m + dual_linear_part(duals);
    Ok(acc.finish(Some(db.finish(x, y, 1.0)), value))
}

/// Unbiased incremental supergradient from `batch` pairs drawn uniformly with
/// replacement; each draw is weighted `n·m / batch`.
pub fn incremental_supergradient<R: Rng + ?Sized>(
    b: &Matrix,
    duals: &DualPair,
    x: &SampleSet,
    y: &SampleSet,
    batch: usize,
    rng: &mut R,
) -> Result<Supergradient> {
    if batch == 0 {
        return Err(Error::InvalidParameter("incremental batch must be positive"));
    }
    let (n, m) = (x.n(), y.n());
    let pairs: Vec<(usize, usize)> =
        (0..batch).map(|_| (rng.random_range(0..n), rng.random_range(0..m))).collect();
    let weight = (n * m) as f64 / batch as f64;
    supergradient_from_pairs(b, duals, x, y, &pairs, weight)
}

/// Penalized dual objective `g(B, u, v) − λ‖B‖₁`.
pub fn dual_value(
    b: &Matrix,
    duals: &DualPair,
    x: &SampleSet,
    y: &SampleSet,
    lambda: f64,
) -> Result<f64> {
    check_state(b, duals, x, y)?;
    let costs = PairCosts::new(b, x, y)?;
    let inv_m = 1.0 / y.n() as f64;
    let mut min_sum = 0.0;
    for i in 0..x.n() {
        for j in 0..y.n() {
            min_sum += (costs.get(i, j) - duals.u[i] - duals.v[j]).min(0.0);
        }
    }
    Ok(min_sum * inv_m + dual_linear_part(duals) - lambda * b.l1_norm())
}

/// `min_M tr(W_M B)`: exact transport with costs `z_ijᵀ B z_ij`.
///
/// Solved by assignment on the replicated problem, so it is meant for
/// diagnostics and tests rather than the solver loop.
pub fn matching_value(b: &Matrix, x: &SampleSet, y: &SampleSet) -> Result<f64> {
    let costs = PairCosts::new(b, x, y)?;
    uniform_transport_cost(&costs.to_matrix())
}

/// Euclidean projection onto the probability simplex `{w ≥ 0, Σw = 1}`.
pub fn simplex_project(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    values.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Relative asymmetry above which [`project_to_feasible`] refuses its input.
pub const PROJECTION_SYMMETRY_TOL: f64 = 1e-8;

/// Projects onto the trace-one PSD cone, then soft-thresholds every entry by
/// `delta · lambda` when `lambda > 0`.
pub fn project_to_feasible(b: &Matrix, lambda: f64, delta: f64) -> Result<TraceOneMatrix> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch { expected: b.rows(), found: b.cols() });
    }
    if !b.is_finite() {
        return Err(Error::NonFinite("matrix to project"));
    }
    let asym = b.asymmetry();
    if asym > PROJECTION_SYMMETRY_TOL * b.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut sym = b.clone();
    sym.symmetrize();
    let eig = symmetric_eigen(&sym)?;
    let w = simplex_project(&eig.values);
    let mut out = eig.reassemble(&w);
    if lambda > 0.0 {
        let thr = delta * lambda;
        for v in out.as_mut_slice() {
            *v = v.signum() * (v.abs() - thr).max(0.0);
        }
    }
    out.symmetrize();
    Ok(TraceOneMatrix(out))
}

/// Iterate of the relaxation solver.
#[derive(Debug, Clone)]
pub struct RelaxState {
    pub b: TraceOneMatrix,
    pub duals: DualPair,
    /// Dual updates taken so far; the next uses `eta / √(dual_steps + 1)`.
    pub dual_steps: usize,
    /// Initial dual step in absolute units.
    pub eta: f64,
}

impl RelaxState {
    /// `B = β₀β₀ᵀ` with `β₀ = (1/√d, …, 1/√d)`, zero duals, and the dual step
    /// resolved from `config` at that starting point.
    pub fn initial(x: &SampleSet, y: &SampleSet, config: &RelaxConfig) -> Result<Self> {
        check_pair(x, y)?;
        let d = x.d();
        let beta0 = vec![libm::sqrt(d as f64) / d as f64; d];
        let b = TraceOneMatrix::rank_one(&beta0)?;
        let mean_cost = PairCosts::new(b.matrix(), x, y)?.mean();
        Ok(Self {
            b,
            duals: DualPair::zeros(x.n(), y.n()),
            dual_steps: 0,
            eta: config.effective_eta(x.n().max(y.n()), mean_cost),
        })
    }

    /// Starts from a given `B` with zero duals and an absolute dual step.
    pub fn with_b(b: TraceOneMatrix, n: usize, m: usize, eta: f64) -> Self {
        Self { b, duals: DualPair::zeros(n, m), dual_steps: 0, eta }
    }

    fn apply_dual(&mut self, sg: &Supergradient) {
        self.dual_steps += 1;
        let step = self.eta / libm::sqrt(self.dual_steps as f64);
        for (u, g) in self.duals.u.iter_mut().zip(&sg.du) {
            *u += step * g;
        }
        for (v, g) in self.duals.v.iter_mut().zip(&sg.dv) {
            *v += step * g;
        }
    }

    fn apply_b(&mut self, db: &Matrix, config: &RelaxConfig) -> Result<()> {
        let norm = db.frobenius_norm();
        if norm == 0.0 {
            return Ok(());
        }
        let delta = config.gamma / norm;
        let mut next = self.b.0.clone();
        next.add_scaled(delta, db);
        self.b = project_to_feasible(&next, config.lambda, delta)?;
        Ok(())
    }
}

/// Takes one dual-only supergradient step at fixed `B`.
pub fn dual_step(
    state: &mut RelaxState,
    costs: &PairCosts,
    x: &SampleSet,
    y: &SampleSet,
) -> Supergradient {
    let sg = supergradient(costs, &state.duals, x, y, false);
    state.apply_dual(&sg);
    sg
}

/// One outer iteration: `dual_steps_per_b − 1` dual-only steps, then a joint
/// step on `(u, v, B)` from a common supergradient. Returns that
/// supergradient, evaluated before the joint update.
pub fn supergradient_step(
    state: &mut RelaxState,
    x: &SampleSet,
    y: &SampleSet,
    config: &RelaxConfig,
) -> Result<Supergradient> {
    check_state(state.b.matrix(), &state.duals, x, y)?;
    let costs = PairCosts::new(state.b.matrix(), x, y)?;
    let sg = match config.b_supergradient {
        BSupergradient::LastPass => {
            for _ in 1..config.dual_steps_per_b {
                dual_step(state, &costs, x, y);
            }
            supergradient(&costs, &state.duals, x, y, true)
        }
        BSupergradient::PassAverage => {
            let mut acc = BAccumulator::new(x.n(), y.n(), x.d());
            for _ in 1..config.dual_steps_per_b {
                let sg = full_pass(&costs, &state.duals, y, Some(&mut acc));
                state.apply_dual(&sg);
            }
            let mut sg = full_pass(&costs, &state.duals, y, Some(&mut acc));
            sg.db = Some(acc.finish(x, y, 1.0 / config.dual_steps_per_b as f64));
            sg
        }
    };
    state.apply_dual(&sg);
    state.apply_b(sg.db.as_ref().expect("requested"), config)?;
    Ok(sg)
}

/// Incremental counterpart of [`supergradient_step`]: every supergradient is
/// estimated from `config.incremental_batch` random pairs.
pub fn incremental_step<R: Rng + ?Sized>(
    state: &mut RelaxState,
    x: &SampleSet,
    y: &SampleSet,
    config: &RelaxConfig,
    rng: &mut R,
) -> Result<Supergradient> {
    let batch = config
        .incremental_batch
        .ok_or(Error::InvalidParameter("incremental step needs a batch size"))?;
    let average = config.b_supergradient == BSupergradient::PassAverage;
    let mut sum: Option<Matrix> = None;
    for _ in 1..config.dual_steps_per_b {
        let sg = incremental_supergradient(state.b.matrix(), &state.duals, x, y, batch, rng)?;
        state.apply_dual(&sg);
        if average {
            let db = sg.db.expect("requested");
            match sum.as_mut() {
                Some(acc) => acc.add_scaled(1.0, &db),
                None => sum = Some(db),
            }
        }
    }
    let mut sg = incremental_supergradient(state.b.matrix(), &state.duals, x, y, batch, rng)?;
    if let Some(mut acc) = sum {
        acc.add_scaled(1.0, sg.db.as_ref().expect("requested"));
        acc.scale(1.0 / config.dual_steps_per_b as f64);
        sg.db = Some(acc);
    }
    state.apply_dual(&sg);
    state.apply_b(sg.db.as_ref().expect("requested"), config)?;
    Ok(sg)
}

/// Result of running dual-only ascent at a fixed `B`.
#[derive(Debug, Clone)]
pub struct DualAscent {
    pub duals: DualPair,
    /// Best `g(B, u, v)` seen.
    pub best_value: f64,
    pub steps: usize,
}

/// Maximizes `g(B, ·, ·)` by supergradient ascent with steps `eta / √t`,
/// stopping early once `target` (if given) is reached within `tol`.
pub fn dual_ascent(
    b: &Matrix,
    x: &SampleSet,
    y: &SampleSet,
    eta: f64,
    max_steps: usize,
    target: Option<(f64, f64)>,
) -> Result<DualAscent> {
    let mut state = RelaxState::with_b(TraceOneMatrix(b.clone()), x.n(), y.n(), eta);
    check_state(b, &state.duals, x, y)?;
    let costs = PairCosts::new(b, x, y)?;
    let mut best = f64::NEG_INFINITY;
    let mut best_duals = state.duals.clone();
    let mut steps = 0;
    while steps < max_steps {
        let before = state.duals.clone();
        let sg = dual_step(&mut state, &costs, x, y);
        steps += 1;
        if sg.dual_value > best {
            best = sg.dual_value;
            best_duals = before;
        }
        if let Some((t, tol)) = target {
            if (t - best).abs() <= tol {
                break;
            }
        }
    }
    Ok(DualAscent { duals: best_duals, best_value: best, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Patience,
    MaxIter,
}

/// Per-iteration log of a relaxation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxTrace {
    /// Tracked objective `g(B_t, u_t, v_t) − λ‖B_t‖₁` at each evaluation.
    pub objectives: Vec<f64>,
    /// Running maximum of `objectives`.
    pub best_objectives: Vec<f64>,
    /// `(iteration, matching_value(B) − λ‖B‖₁)` when diagnostics are enabled.
    pub primal_proxy: Vec<(usize, f64)>,
    pub iterations: usize,
    pub best_iteration: usize,
    pub stop: StopReason,
    /// True when the inputs were swapped so the first population is the larger.
    pub swapped: bool,
}

#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub b_best: TraceOneMatrix,
    pub beta: ProjectionVector,
    pub best_objective: f64,
    pub trace: RelaxTrace,
}

/// Runs the relaxation solver from `B₀ = β₀β₀ᵀ`, returning the dominant
/// eigenvector of the best tracked iterate.
pub fn relax_solve(x: &SampleSet, y: &SampleSet, config: &RelaxConfig) -> Result<RelaxOutcome> {
    config.validate()?;
    check_pair(x, y)?;
    let swapped = x.n() < y.n();
    let (x, y) = if swapped { (y, x) } else { (x, y) };
    let (n, m) = (x.n(), y.n());

    let mut state = RelaxState::initial(x, y, config)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    if config.dual_warmup > 0 {
        let costs = PairCosts::new(state.b.matrix(), x, y)?;
        for _ in 0..config.dual_warmup {
            dual_step(&mut state, &costs, x, y);
        }
    }
    let eval_every = config.incremental_batch.map_or(1, |b| (n * m).div_ceil(b).max(1));

    let mut trace = RelaxTrace {
        objectives: Vec::new(),
        best_objectives: Vec::new(),
        primal_proxy: Vec::new(),
        iterations: 0,
        best_iteration: 0,
        stop: StopReason::MaxIter,
        swapped,
    };
    let mut best_b = state.b.clone();
    let mut best = f64::NEG_INFINITY;
    let mut since_improvement = 0usize;

    for t in 0..config.max_iter {
        trace.iterations = t + 1;
        if let Some(k) = config.diagnostics_every {
            if t % k == 0 {
                let proxy = matching_value(state.b.matrix(), x, y)? - config.lambda * state.b.matrix().l1_norm();
                trace.primal_proxy.push((t, proxy));
            }
        }
        let b_before = state.b.clone();
        let value = match config.incremental_batch {
            None => {
                let sg = supergradient_step(&mut state, x, y, config)?;
                Some(sg.dual_value - config.lambda * b_before.matrix().l1_norm())
            }
            Some(_) => {
                let value = if t % eval_every == 0 {
                    Some(dual_value(b_before.matrix(), &state.duals, x, y, config.lambda)?)
                } else {
                    None
                };
                incremental_step(&mut state, x, y, config, &mut rng)?;
                value
            }
        };
        let Some(value) = value else { continue };
        if !value.is_finite() {
            return Err(Error::Diverged(t));
        }
        trace.objectives.push(value);
        if value > best {
            best = value;
            best_b = b_before;
            trace.best_iteration = t;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        trace.best_objectives.push(best);
        if since_improvement >= config.patience {
            trace.stop = StopReason::Patience;
            break;
        }
    }

    let beta = best_b.dominant_direction()?;
    Ok(RelaxOutcome { b_best: best_b, beta, best_objective: best, trace })
}
