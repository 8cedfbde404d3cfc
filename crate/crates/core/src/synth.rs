//! Seeded scenario generators.
//!
//! All randomness comes from ChaCha20 streams (`rand_chacha` 0.9): a scenario
//! seed selects the key and each population draws from its own stream, so
//! outputs are pure functions of `(spec, seed)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::matrix::Matrix;
use crate::samples::SampleSet;
use crate::wasserstein::GaussianSpec;

/// Stream used for the first population's draws.
pub const STREAM_X: u64 = 1;
/// Stream used for the second population's draws.
pub const STREAM_Y: u64 = 2;
/// Stream used for random covariance parameters.
pub const STREAM_PARAMS: u64 = 3;

/// ChaCha20 generator keyed by `seed` and positioned on `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` draws of `μ + Σ^{1/2} z` with `z` standard normal.
pub fn gaussian_sample_with<R: Rng + ?Sized>(spec: &GaussianSpec, n: usize, rng: &mut R) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Empty("sample count"));
    }
    let d = spec.dim();
    let root = psd_sqrt(spec.covariance())?;
    let mut values = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(rng);
        }
        for (r, mu) in spec.mean().iter().enumerate() {
            let row = root.row(r);
            values.push(mu + row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    SampleSet::new(n, d, values)
}

pub fn gaussian_sample(spec: &GaussianSpec, n: usize, seed: u64) -> Result<SampleSet> {
    gaussian_sample_with(spec, n, &mut stream_rng(seed, STREAM_X))
}

/// Covariances of the three-dimensional two-population example.
pub fn figure1a_covariances() -> (Matrix, Matrix) {
    let sx = Matrix::from_rows(&[[1.0, 0.2, 0.4], [0.2, 1.0, 0.0], [0.4, 0.0, 1.0]]).expect("3x3");
    let sy = Matrix::from_rows(&[[1.0, -0.9, 0.0], [-0.9, 1.0, 0.0], [0.0, 0.0, 1.0]]).expect("3x3");
    (sx, sy)
}

/// Mean-zero Gaussians with [`figure1a_covariances`].
pub fn figure1a_dataset(n: usize, m: usize, seed: u64) -> Result<(SampleSet, SampleSet)> {
    let (sx, sy) = figure1a_covariances();
    let gx = GaussianSpec::new(vec![0.0; 3], sx)?;
    let gy = GaussianSpec::new(vec![0.0; 3], sy)?;
    let x = gaussian_sample_with(&gx, n, &mut stream_rng(seed, STREAM_X))?;
    let y = gaussian_sample_with(&gy, m, &mut stream_rng(seed, STREAM_Y))?;
    Ok((x, y))
}

/// Wishart(I_p, ν) draw by the Bartlett decomposition `W = A Aᵀ`, where `A`
/// is lower triangular with `A_ii² ~ χ²(ν − i)` and standard normal entries
/// below the diagonal. Requires `ν > p − 1`.
pub fn wishart_identity<R: Rng + ?Sized>(p: usize, dof: f64, rng: &mut R) -> Result<Matrix> {
    if p == 0 || !(dof > (p - 1) as f64) {
        return Err(Error::InvalidParameter("wishart needs dof > p - 1"));
    }
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(dof - i as f64).map_err(|_| Error::InvalidParameter("chi-square dof"))?;
        a[(i, i)] = libm::sqrt(chi.sample(rng));
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let mut w = a.matmul(&a.transpose())?;
    w.symmetrize();
    Ok(w)
}

/// Size of each feature block.
pub const BLOCK: usize = 3;
/// Degrees of freedom of the block covariance draws.
pub const WISHART_DOF: f64 = 3.0;

/// Block-structured pair of populations differing only in the first block.
#[derive(Debug, Clone)]
pub struct WishartBlocks {
    pub x: SampleSet,
    pub y: SampleSet,
    /// Features that carry the difference: always `[0, 1, 2]`.
    pub support: Vec<usize>,
    pub covariance_x: Matrix,
    pub covariance_y: Matrix,
}

/// `d = 3·ell` mean-zero Gaussian features in blocks of three. Every block
/// covariance is a Wishart(I₃, 3) draw shared by both populations, except the
/// first block, which gets independent draws for each.
pub fn wishart_blocks_dataset(ell: usize, n: usize, m: usize, seed: u64) -> Result<WishartBlocks> {
    if ell == 0 {
        return Err(Error::InvalidParameter("need at least one block"));
    }
    let d = BLOCK * ell;
    let mut params = stream_rng(seed, STREAM_PARAMS);
    let mut cx = Matrix::zeros(d, d);
    let mut cy = Matrix::zeros(d, d);
    for block in 0..ell {
        let wx = wishart_identity(BLOCK, WISHART_DOF, &mut params)?;
        let wy = if block == 0 { wishart_identity(BLOCK, WISHART_DOF, &mut params)? } else { wx.clone() };
        let off = block * BLOCK;
        for r in 0..BLOCK {
            for s in 0..BLOCK {
                cx[(off + r, off + s)] = wx[(r, s)];
                cy[(off + r, off + s)] = wy[(r, s)];
            }
        }
    }
    let gx = GaussianSpec::new(vec![0.0; d], cx.clone())?;
    let gy = GaussianSpec::new(vec![0.0; d], cy.clone())?;
    let x = gaussian_sample_with(&gx, n, &mut stream_rng(seed, STREAM_X))?;
    let y = gaussian_sample_with(&gy, m, &mut stream_rng(seed, STREAM_Y))?;
    Ok(WishartBlocks { x, y, support: vec![0, 1, 2], covariance_x: cx, covariance_y: cy })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Figure1a,
    WishartBlocks { ell: usize },
    /// `X ~ N(0, σ²I)`, `Y ~ N(shift, σ²I)`.
    MeanShift { shift: Vec<f64>, noise_variance: f64 },
    /// `X ~ N(0, I_d)`, `Y ~ N(0, diag(factor, 1, …, 1))`.
    VarianceShift { d: usize, factor: f64 },
    /// Both populations `N(0, I_d)`.
    NullIdentical { d: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub x: SampleSet,
    pub y: SampleSet,
    /// Features known to carry the difference, when the generator defines them.
    pub relevant: Option<Vec<usize>>,
}

fn two_gaussians(gx: &GaussianSpec, gy: &GaussianSpec, n: usize, m: usize, seed: u64) -> Result<(SampleSet, SampleSet)> {
    let x = gaussian_sample_with(gx, n, &mut stream_rng(seed, STREAM_X))?;
    let y = gaussian_sample_with(gy, m, &mut stream_rng(seed, STREAM_Y))?;
    Ok((x, y))
}

impl ScenarioSpec {
    pub fn generate(&self) -> Result<Scenario> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Empty("scenario sample counts"));
        }
        let (n, m, seed) = (self.n, self.m, self.seed);
        match &self.kind {
            ScenarioKind::Figure1a => {
                let (x, y) = figure1a_dataset(n, m, seed)?;
                Ok(Scenario { x, y, relevant: None })
            }
            ScenarioKind::WishartBlocks { ell } => {
                let w = wishart_blocks_dataset(*ell, n, m, seed)?;
                Ok(Scenario { x: w.x, y: w.y, relevant: Some(w.support) })
            }
            ScenarioKind::MeanShift { shift, noise_variance } => {
                if !(*noise_variance >= 0.0) {
                    return Err(Error::InvalidParameter("noise variance must be nonnegative"));
                }
                let d = shift.len();
                let gx = GaussianSpec::isotropic(vec![0.0; d], *noise_variance)?;
                let gy = GaussianSpec::isotropic(shift.clone(), *noise_variance)?;
                let (x, y) = two_gaussians(&gx, &gy, n, m, seed)?;
                let relevant = (0..d).filter(|&k| shift[k] != 0.0).collect();
                Ok(Scenario { x, y, relevant: Some(relevant) })
            }
            ScenarioKind::VarianceShift { d, factor } => {
                if *d == 0 || !(*factor >= 0.0) {
                    return Err(Error::InvalidParameter("variance shift needs d >= 1 and factor >= 0"));
                }
                let gx = GaussianSpec::isotropic(vec![0.0; *d], 1.0)?;
                let mut diag = vec![1.0; *d];
                diag[0] = *factor;
                let gy = GaussianSpec::new(vec![0.0; *d], Matrix::diagonal(&diag))?;
                let (x, y) = two_gaussians(&gx, &gy, n, m, seed)?;
                Ok(Scenario { x, y, relevant: Some(vec![0]) })
            }
            ScenarioKind::NullIdentical { d } => {
                if *d == 0 {
                    return Err(Error::InvalidParameter("d must be positive"));
                }
                let g = GaussianSpec::isotropic(vec![0.0; *d], 1.0)?;
                let (x, y) = two_gaussians(&g, &g, n, m, seed)?;
                Ok(Scenario { x, y, relevant: Some(Vec::new()) })
            }
        }
    }
}
