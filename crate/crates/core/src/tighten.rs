//! Projected gradient ascent on `J(β)` over the unit half-ball intersected
//! with the `k`-sparse vectors, started from the relaxation's direction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::norm2;
use crate::samples::{canonicalize_sign, ProjectionVector, SampleSet, BALL_TOL};
use crate::wasserstein::{
    canonical_direction, coupled_cost, gradient_from_orders, objective, sort_order, Projected,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TightenConfig {
    /// Maximum number of nonzero coordinates.
    pub k: usize,
    /// The `t`-th step has length `step0 / √t` along the gradient.
    pub step0: f64,
    pub max_iter: usize,
    /// Improvements of the best objective below this count as a stall.
    pub tol: f64,
    /// Consecutive stalled iterations before stopping.
    pub stall_window: usize,
    pub seed: u64,
}

impl TightenConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, step0: 0.5, max_iter: 5000, tol: 1e-9, stall_window: 100, seed: 0 }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k == 0 || self.k > d {
            return Err(Error::InvalidParameter("k must lie in 1..=d"));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::InvalidParameter("step0 must be positive"));
        }
        if self.max_iter == 0 || self.stall_window == 0 {
            return Err(Error::InvalidParameter("max_iter and stall_window must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("tol must be nonnegative"));
        }
        Ok(())
    }
}

/// Rescales onto the unit sphere when outside the ball, then fixes the sign.
/// The zero vector is returned unchanged; callers treat it as degenerate.
///
/// Norms within [`BALL_TOL`] of one count as inside, so a rescaled vector whose
/// norm rounds to `1 + ε` is a fixed point.
pub fn project_half_ball(beta: &[f64]) -> ProjectionVector {
    let mut v = beta.to_vec();
    let norm = norm2(&v);
    if norm > 1.0 + BALL_TOL {
        v.iter_mut().for_each(|c| *c /= norm);
    }
    canonicalize_sign(&mut v);
    ProjectionVector::from_canonical(v)
}

/// Zeroes all but the `k` entries largest in magnitude (lowest index wins ties).
pub fn truncate_topk(beta: &[f64], k: usize) -> Vec<f64> {
    if k >= beta.len() {
        return beta.to_vec();
    }
    let mut idx: Vec<usize> = (0..beta.len()).collect();
    idx.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()));
    let mut out = alloc::vec![0.0; beta.len()];
    for &i in &idx[..k] {
        out[i] = beta[i];
    }
    out
}

/// Sample orders along the previous direction, reused as the starting point
/// of the next sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortCache {
    pub x_order: Vec<usize>,
    pub y_order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GradientPass {
    pub gradient: Vec<f64>,
    pub order: SortCache,
    /// Adjacent swaps performed by the insertion sort (zero on a cold sort).
    pub swaps: usize,
}

/// Insertion sort of `order` by `(values[i], i)`; returns the swap count.
fn insertion_sort(order: &mut [usize], values: &[f64]) -> usize {
    let less = |a: usize, b: usize| match values[a].total_cmp(&values[b]) {
        core::cmp::Ordering::Less => true,
        core::cmp::Ordering::Equal => a < b,
        core::cmp::Ordering::Greater => false,
    };
    let mut swaps = 0;
    for k in 1..order.len() {
        let mut p = k;
        while p > 0 && less(order[p], order[p - 1]) {
            order.swap(p, p - 1);
            p -= 1;
            swaps += 1;
        }
    }
    swaps
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = alloc::vec![false; n];
    order.iter().all(|&i| i < n && !core::mem::replace(&mut seen[i], true))
}

/// Gradient of `J` at `beta`, re-sorting from `prev` by insertion when given.
///
/// Produces the same coupling, and hence the same gradient bits, as
/// [`crate::wasserstein::gradient`].
pub fn sorted_gradient_pass(
    x: &SampleSet,
    y: &SampleSet,
    beta: &[f64],
    prev: Option<&SortCache>,
) -> Result<GradientPass> {
    if x.d() != y.d() || beta.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: beta.len() });
    }
    let (canon, flipped) = canonical_direction(beta);
    let proj = Projected::new(x, y, &canon)?;
    let (order, swaps) = match prev {
        Some(cache) => {
            if !is_permutation(&cache.x_order, x.n()) || !is_permutation(&cache.y_order, y.n()) {
                return Err(Error::InvalidParameter("sort cache does not match the samples"));
            }
            let mut order = cache.clone();
            let s = insertion_sort(&mut order.x_order, &proj.px) + insertion_sort(&mut order.y_order, &proj.py);
            (order, s)
        }
        None => (SortCache { x_order: sort_order(&proj.px), y_order: sort_order(&proj.py) }, 0),
    };
    let mut gradient = gradient_from_orders(x, y, &proj, &order.x_order, &order.y_order);
    if flipped {
        gradient.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(GradientPass { gradient, order, swaps })
}

#[derive(Debug, Clone)]
pub struct TightenOutcome {
    pub beta: ProjectionVector,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each projected step.
    pub history: Vec<f64>,
}

/// Projected gradient ascent from `beta0`.
///
/// Each step is `β ← truncate_topk(project_half_ball(β + s_t ∇J(β)), k)` with
/// `s_t = step0/√t`; the best iterate is returned. A `beta0` already in the
/// feasible set is itself a candidate, so the result never falls below
/// `J(beta0)`.
pub fn tighten(
    x: &SampleSet,
    y: &SampleSet,
    beta0: &[f64],
    config: &TightenConfig,
) -> Result<TightenOutcome> {
    if x.d() != y.d() || beta0.len() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: beta0.len() });
    }
    config.validate(x.d())?;
    if beta0.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateProjection);
    }

    let start = project_half_ball(&truncate_topk(&project_half_ball(beta0), config.k));
    if start.is_zero() {
        return Err(Error::DegenerateProjection);
    }
    let feasible0 = norm2(beta0) <= 1.0 + BALL_TOL
        && beta0.iter().filter(|&&c| c != 0.0).count() <= config.k;

    let mut beta = start.clone();
    let (mut best_beta, mut best) = if feasible0 {
        let b0 = ProjectionVector::new(beta0.to_vec())?;
        let j0 = objective(x, y, &b0)?;
        (b0, j0)
    } else {
        let j = objective(x, y, &start)?;
        (start, j)
    };
    let mut cache: Option<SortCache> = None;
    let mut history = Vec::new();
    let mut stalled = 0usize;
    let mut iterations = 0usize;

    for t in 1..=config.max_iter {
        iterations = t;
        let pass = sorted_gradient_pass(x, y, &beta, cache.as_ref())?;
        let step = config.step0 / libm::sqrt(t as f64);
        let moved: Vec<f64> = beta.iter().zip(&pass.gradient).map(|(b, g)| b + step * g).collect();
        let next = project_half_ball(&truncate_topk(&project_half_ball(&moved), config.k));
        if next.is_zero() {
            return Err(Error::DegenerateProjection);
        }
        let proj = Projected::new(x, y, &next)?;
        let mut order = pass.order;
        insertion_sort(&mut order.x_order, &proj.px);
        insertion_sort(&mut order.y_order, &proj.py);
        let value = coupled_cost(&proj.px, &order.x_order, &proj.py, &order.y_order);
        history.push(value);

        if value > best + config.tol {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if value > best {
            best = value;
            best_beta = next.clone();
        }
        cache = Some(order);
        beta = next;
        if stalled >= config.stall_window {
            break;
        }
    }
    Ok(TightenOutcome { beta: best_beta, objective: best, iterations, history })
}
