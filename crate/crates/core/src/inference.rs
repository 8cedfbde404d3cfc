//! Relax-then-tighten analysis, permutation testing and cross-validated
//! choice of the ℓ₁ penalty.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::relax::{relax_solve, RelaxConfig, RelaxTrace};
use crate::samples::{ProjectionVector, SampleSet};
use crate::synth::stream_rng;
use crate::tighten::{tighten, TightenConfig};
use crate::wasserstein::objective;

/// Tightening parameters whose `k` may be derived from the relaxed solution.
#[derive(Debug, Clone, PartialEq)]
pub struct TightenSettings {
    /// Fixed sparsity level; derived from the relaxed direction when `None`.
    pub k: Option<usize>,
    pub step0: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub stall_window: usize,
    /// Coordinates of the relaxed direction at or below this count as zero.
    pub zero_threshold: f64,
}

impl Default for TightenSettings {
    fn default() -> Self {
        let base = TightenConfig::with_k(1);
        Self {
            k: None,
            step0: base.step0,
            max_iter: base.max_iter,
            tol: base.tol,
            stall_window: base.stall_window,
            zero_threshold: 1e-6,
        }
    }
}

impl TightenSettings {
    fn resolve(&self, k: usize, seed: u64) -> TightenConfig {
        TightenConfig {
            k,
            step0: self.step0,
            max_iter: self.max_iter,
            tol: self.tol,
            stall_window: self.stall_window,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub beta: ProjectionVector,
    /// `J(beta)` on the analyzed samples.
    pub divergence: f64,
    pub k_effective: usize,
    pub lambda_used: f64,
    pub relax_beta: ProjectionVector,
    pub relax_divergence: f64,
    pub tightened_divergence: f64,
    pub relax_trace: RelaxTrace,
    pub tighten_iterations: usize,
}

/// Relaxation followed by tightening from its direction; keeps whichever of
/// the two directions has the larger divergence.
pub fn pda_analyze(
    x: &SampleSet,
    y: &SampleSet,
    relax: &RelaxConfig,
    tighten_settings: &TightenSettings,
) -> Result<AnalysisResult> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: y.d() });
    }
    let d = x.d();
    let relaxed = relax_solve(x, y, relax)?;
    let k = match tighten_settings.k {
        Some(k) => k,
        None if relax.lambda == 0.0 => d,
        None => relaxed.beta.support_size(tighten_settings.zero_threshold).max(1),
    };
    let relax_divergence = objective(x, y, &relaxed.beta)?;
    let tightened = tighten(x, y, &relaxed.beta, &tighten_settings.resolve(k, relax.seed))?;
    let beta = if tightened.objective >= relax_divergence { tightened.beta } else { relaxed.beta.clone() };
    let divergence = objective(x, y, &beta)?;
    Ok(AnalysisResult {
        beta,
        divergence,
        k_effective: k,
        lambda_used: relax.lambda,
        relax_beta: relaxed.beta,
        relax_divergence,
        tightened_divergence: tightened.objective,
        relax_trace: relaxed.trace,
        tighten_iterations: tightened.iterations,
    })
}

/// Number of grid values in [`default_lambda_grid`].
pub const DEFAULT_GRID_SIZE: usize = 8;

/// Log-spaced penalties from `1e-4·s` to `s`, where `s` is the mean
/// per-feature variance of the pooled samples.
pub fn default_lambda_grid(x: &SampleSet, y: &SampleSet, count: usize) -> Result<Vec<f64>> {
    let pooled = x.concat(y)?;
    let vars = pooled.column_variances();
    let scale = vars.iter().sum::<f64>() / vars.len() as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    Ok(match count {
        0 => Vec::new(),
        1 => alloc::vec![scale],
        _ => (0..count)
            .map(|i| scale * libm::pow(10.0, -4.0 + 4.0 * i as f64 / (count - 1) as f64))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub lambda: f64,
    /// Held-out divergence for each fold.
    pub fold_divergences: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambda_star: f64,
    pub table: Vec<CvRow>,
}

/// Shuffled fold labels: position `p` of a seeded permutation goes to fold `p % folds`.
fn fold_labels(n: usize, folds: usize, rng: &mut impl RngCore) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut labels = alloc::vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        labels[i] = pos % folds;
    }
    labels
}

fn split(s: &SampleSet, labels: &[usize], fold: usize) -> Result<(SampleSet, SampleSet)> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..s.n()).partition(|&i| labels[i] == fold);
    Ok((s.select(&train)?, s.select(&test)?))
}

/// For each penalty, fits on the training part of both populations and scores
/// the fitted direction by the divergence between the held-out parts.
/// Picks the largest mean held-out divergence, preferring the smaller penalty
/// on ties.
pub fn cross_validate_lambda(
    x: &SampleSet,
    y: &SampleSet,
    grid: &[f64],
    folds: usize,
    seed: u64,
    relax: &RelaxConfig,
    tighten_settings: &TightenSettings,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    if grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("lambda grid values must be finite and nonnegative"));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter("cross-validation needs at least two folds"));
    }
    let smallest = (x.n() / folds).min(y.n() / folds);
    if smallest < 2 {
        return Err(Error::FoldTooSmall(smallest));
    }
    let mut rng = stream_rng(seed, 0);
    let x_labels = fold_labels(x.n(), folds, &mut rng);
    let y_labels = fold_labels(y.n(), folds, &mut rng);
    let splits: Vec<_> = (0..folds)
        .map(|f| Ok((split(x, &x_labels, f)?, split(y, &y_labels, f)?)))
        .collect::<Result<_>>()?;

    let mut table = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let cfg = RelaxConfig { lambda, ..relax.clone() };
        let mut fold_divergences = Vec::with_capacity(folds);
        for ((x_train, x_test), (y_train, y_test)) in &splits {
            let fit = pda_analyze(x_train, y_train, &cfg, tighten_settings)?;
            fold_divergences.push(objective(x_test, y_test, &fit.beta)?);
        }
        let mean = fold_divergences.iter().sum::<f64>() / folds as f64;
        table.push(CvRow { lambda, fold_divergences, mean });
    }
    let mut best = &table[0];
    for row in &table[1..] {
        if row.mean > best.mean || (row.mean == best.mean && row.lambda < best.lambda) {
            best = row;
        }
    }
    Ok(CvResult { lambda_star: best.lambda, table })
}

/// How the penalty is chosen for each analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    /// Re-selected by cross-validation on every dataset analyzed, including
    /// every permuted one. `grid = None` uses [`default_lambda_grid`].
    CrossValidated { grid: Option<Vec<f64>>, folds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub relax: RelaxConfig,
    pub tighten: TightenSettings,
    pub lambda: LambdaChoice,
}

impl PipelineConfig {
    /// Unpenalized analysis with default solver settings.
    pub fn pda() -> Self {
        Self { relax: RelaxConfig::default(), tighten: TightenSettings::default(), lambda: LambdaChoice::Fixed(0.0) }
    }

    pub fn fixed(lambda: f64) -> Self {
        Self { lambda: LambdaChoice::Fixed(lambda), ..Self::pda() }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub analysis: AnalysisResult,
    pub cv: Option<CvResult>,
}

/// Chooses the penalty as configured, then runs [`pda_analyze`].
pub fn run_pipeline(x: &SampleSet, y: &SampleSet, config: &PipelineConfig, seed: u64) -> Result<PipelineRun> {
    let (lambda, cv) = match &config.lambda {
        LambdaChoice::Fixed(l) => (*l, None),
        LambdaChoice::CrossValidated { grid, folds } => {
            let grid = match grid {
                Some(g) => g.clone(),
                None => default_lambda_grid(x, y, DEFAULT_GRID_SIZE)?,
            };
            let cv = cross_validate_lambda(x, y, &grid, *folds, seed, &config.relax, &config.tighten)?;
            (cv.lambda_star, Some(cv))
        }
    };
    let relax = RelaxConfig { lambda, ..config.relax.clone() };
    let analysis = pda_analyze(x, y, &relax, &config.tighten)?;
    Ok(PipelineRun { analysis, cv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullMode {
    /// Penalty re-selected on every permuted dataset.
    Reselected,
    /// Penalty held fixed across permutations.
    FixedLambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport {
    pub observed_stat: f64,
    pub null_stats: Vec<f64>,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub null_mode: NullMode,
}

impl PermutationReport {
    /// Add-one p-value `(1 + #{null ≥ observed}) / (1 + n_perm)`.
    pub fn from_stats(observed_stat: f64, null_stats: Vec<f64>, seed: u64, null_mode: NullMode) -> Result<Self> {
        if null_stats.is_empty() {
            return Err(Error::InvalidParameter("at least one permutation is required"));
        }
        let exceed = null_stats.iter().filter(|&&s| s >= observed_stat).count();
        let n_permutations = null_stats.len();
        Ok(Self {
            observed_stat,
            p_value: (1 + exceed) as f64 / (1 + n_permutations) as f64,
            null_stats,
            n_permutations,
            seed,
            null_mode,
        })
    }
}

/// Label reassignment for permutation `index`: indices into the pooled
/// samples (first population first) whose first `n` entries form the new
/// first group. Depends only on `(seed, index)`.
pub fn permuted_labels(n: usize, m: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, index + 1);
    let mut idx: Vec<usize> = (0..n + m).collect();
    idx.shuffle(&mut rng);
    idx
}

/// Seed handed to the statistic for permutation `index` (cross-validation
/// fold assignment, solver seed).
pub fn permutation_seed(seed: u64, index: u64) -> u64 {
    // label streams use the low half of the stream space
    stream_rng(seed, (1 << 63) | index).next_u64()
}

/// Statistic on the `index`-th relabeled dataset.
pub fn null_statistic<F>(pooled: &SampleSet, n: usize, seed: u64, index: u64, statistic: &mut F) -> Result<f64>
where
    F: FnMut(&SampleSet, &SampleSet, u64) -> Result<f64>,
{
    let m = pooled.n() - n;
    let labels = permuted_labels(n, m, seed, index);
    let xp = pooled.select(&labels[..n])?;
    let yp = pooled.select(&labels[n..])?;
    statistic(&xp, &yp, permutation_seed(seed, index))
}

/// Permutation test with an arbitrary statistic `(x, y, seed) -> value`.
pub fn permutation_test_with<F>(
    x: &SampleSet,
    y: &SampleSet,
    n_perm: usize,
    seed: u64,
    null_mode: NullMode,
    mut statistic: F,
) -> Result<PermutationReport>
where
    F: FnMut(&SampleSet, &SampleSet, u64) -> Result<f64>,
{
    if n_perm == 0 {
        return Err(Error::InvalidParameter("at least one permutation is required"));
    }
    let observed = statistic(x, y, seed)?;
    let pooled = x.concat(y)?;
    let nulls = (0..n_perm as u64)
        .map(|p| null_statistic(&pooled, x.n(), seed, p, &mut statistic))
        .collect::<Result<Vec<_>>>()?;
    PermutationReport::from_stats(observed, nulls, seed, null_mode)
}

/// Null mode implied by a pipeline configuration.
pub fn null_mode(config: &PipelineConfig) -> NullMode {
    match config.lambda {
        LambdaChoice::Fixed(_) => NullMode::FixedLambda,
        LambdaChoice::CrossValidated { .. } => NullMode::Reselected,
    }
}

/// Tests `P_X = P_Y` using the tightened divergence as the statistic, rerunning
/// the whole pipeline (penalty selection included) on every relabeling.
pub fn permutation_test(
    x: &SampleSet,
    y: &SampleSet,
    config: &PipelineConfig,
    n_perm: usize,
    seed: u64,
) -> Result<PermutationReport> {
    permutation_test_with(x, y, n_perm, seed, null_mode(config), |a, b, s| {
        Ok(run_pipeline(a, b, config, s)?.analysis.divergence)
    })
}
