mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sparda_core::{
    gaussian_wasserstein, gradient, objective, project, quantile_coupling, wasserstein1d, GaussianSpec, Matrix,
    ProjectionVector, SampleSet,
};

#[test]
fn projection_examples() {
    let x = SampleSet::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert_eq!(project(&x, &[1.0, 0.0]).unwrap(), [1.0, 0.0]);
    assert_eq!(project(&x, &[0.0, 0.0]).unwrap(), [0.0, 0.0]);
    let x = SampleSet::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let p = project(&x, &[0.6, 0.8]).unwrap();
    assert!((p[0] - 2.2).abs() < 1e-12 && (p[1] - 5.0).abs() < 1e-12);
    assert!(project(&x, &[1.0]).is_err());
}

fn triples(n: usize, m: usize) -> Vec<(usize, usize, f64)> {
    quantile_coupling(n, m).unwrap().entries.iter().map(|e| (e.i, e.j, e.weight)).collect()
}

#[test]
fn coupling_examples() {
    assert_eq!(triples(2, 2), [(0, 0, 0.5), (1, 1, 0.5)]);
    assert_eq!(triples(2, 1), [(0, 0, 0.5), (1, 0, 0.5)]);
    let t = triples(3, 2);
    let expected = [(0, 0, 1.0 / 3.0), (1, 0, 1.0 / 6.0), (1, 1, 1.0 / 6.0), (2, 1, 1.0 / 3.0)];
    assert_eq!(t.len(), 4);
    for (a, b) in t.iter().zip(&expected) {
        assert_eq!((a.0, a.1), (b.0, b.1));
        assert!((a.2 - b.2).abs() < 1e-15);
    }
}

#[test]
fn coupling_of_three_by_two_is_lp_optimal_for_sorted_costs() {
    // any strictly convex cost of sorted points is minimized by the monotone plan
    let xs = [-1.0f64, 0.3, 2.0];
    let ys = [0.0f64, 1.5];
    let via_coupling: f64 = triples(3, 2).iter().map(|&(i, j, w)| w * (xs[i] - ys[j]).powi(2)).sum();
    assert!((via_coupling - lp_wasserstein(&xs, &ys)).abs() < 1e-12);
}

#[test]
fn wasserstein_examples() {
    assert_eq!(wasserstein1d(&[3.0, -1.0, 2.0], &[2.0, 3.0, -1.0]).unwrap(), 0.0);
    assert_eq!(wasserstein1d(&[0.0], &[1.5]).unwrap(), 2.25);
    assert_eq!(wasserstein1d(&[0.0, 1.0], &[0.0]).unwrap(), 0.5);
    assert!((lp_wasserstein(&[0.0, 1.0], &[0.0]) - 0.5).abs() < 1e-12);
    assert!(wasserstein1d(&[], &[1.0]).is_err());
    assert!(wasserstein1d(&[f64::NAN], &[1.0]).is_err());
}

#[test]
fn wasserstein_matches_transport_lp() {
    let mut r = rng(7);
    for _ in 0..200 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=8);
        let xs = uniform_vec(&mut r, n, -5.0, 5.0);
        let ys = uniform_vec(&mut r, m, -5.0, 5.0);
        let lp = lp_wasserstein(&xs, &ys);
        let w = wasserstein1d(&xs, &ys).unwrap();
        assert!((w - lp).abs() <= 1e-9, "n={n} m={m} w={w} lp={lp}");
    }
}

#[test]
fn objective_examples() {
    let mut r = rng(3);
    let x = uniform_samples(&mut r, 6, 3, -1.0, 1.0);
    let beta = ProjectionVector::new(vec![0.3, -0.5, 0.1]).unwrap();
    assert_eq!(objective(&x, &x, &beta).unwrap(), 0.0);

    let zeros = SampleSet::new(4, 2, vec![0.0; 8]).unwrap();
    let mu = SampleSet::from_rows(&[[1.0, -2.0]; 3]).unwrap();
    let b = ProjectionVector::new(vec![0.6, 0.8]).unwrap();
    let expected = (0.6f64 - 1.6).powi(2);
    assert!((objective(&zeros, &mu, &b).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn objective_equals_dense_matching_form() {
    let mut r = rng(11);
    for _ in 0..20 {
        let x = uniform_samples(&mut r, 5, 2, -2.0, 2.0);
        let y = uniform_samples(&mut r, 5, 2, -2.0, 2.0);
        let raw = uniform_vec(&mut r, 2, -1.0, 1.0);
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let beta: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let w = dense_wm(&x, &y, &beta);
        let j = objective(&x, &y, &beta).unwrap();
        assert!((j - quadratic(&w, &beta)).abs() < 1e-10);
    }
}

#[test]
fn gradient_examples() {
    let zeros = SampleSet::from_rows(&[[0.0, 0.0]]).unwrap();
    let mu = SampleSet::from_rows(&[[1.0, 0.0]]).unwrap();
    assert_eq!(gradient(&zeros, &mu, &[1.0, 0.0]).unwrap(), [2.0, 0.0]);

    let mut r = rng(5);
    let x = uniform_samples(&mut r, 5, 3, -1.0, 1.0);
    let g = gradient(&x, &x, &[0.2, -0.7, 0.4]).unwrap();
    assert!(g.iter().all(|&c| c == 0.0));
    assert!(gradient(&x, &x, &[1.0]).is_err());
}

/// Finite differences are only meaningful where the sort orders are stable
/// across the stencil.
fn stable_orders(x: &SampleSet, y: &SampleSet, beta: &[f64], h: f64) -> bool {
    let base = (argsort(&projected(x, beta)), argsort(&projected(y, beta)));
    (0..beta.len()).all(|k| {
        [-h, h].iter().all(|&s| {
            let mut b = beta.to_vec();
            b[k] += s;
            (argsort(&projected(x, &b)), argsort(&projected(y, &b))) == base
        })
    })
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(17);
    let h = 1e-6;
    let mut checked = 0;
    for _ in 0..100 {
        let x = uniform_samples(&mut r, 6, 3, -2.0, 2.0);
        let y = uniform_samples(&mut r, 6, 3, -2.0, 2.0);
        let beta = uniform_vec(&mut r, 3, -1.0, 1.0);
        if !stable_orders(&x, &y, &beta, h) {
            continue;
        }
        let fd = central_difference(|b| objective(&x, &y, b).unwrap(), &beta, h);
        let g = gradient(&x, &y, &beta).unwrap();
        assert!(rel_err(&fd, &g) <= 1e-5, "fd {fd:?} analytic {g:?}");
        checked += 1;
    }
    assert!(checked >= 90);
}

#[test]
fn gaussian_examples() {
    let i2 = Matrix::identity(2);
    let a = GaussianSpec::new(vec![0.0, 0.0], i2.clone()).unwrap();
    assert_eq!(gaussian_wasserstein(&a, &a).unwrap(), 0.0);
    let b = GaussianSpec::new(vec![3.0, 4.0], i2.clone()).unwrap();
    assert!((gaussian_wasserstein(&a, &b).unwrap() - 25.0).abs() < 1e-12);
    let c = GaussianSpec::new(vec![0.0, 0.0], Matrix::diagonal(&[4.0, 4.0])).unwrap();
    assert!((gaussian_wasserstein(&a, &c).unwrap() - 2.0).abs() < 1e-12);
    assert!(GaussianSpec::new(vec![0.0, 0.0], Matrix::diagonal(&[1.0, -1.0])).is_err());
    let asym = Matrix::from_rows(&[[1.0, 0.1], [0.0, 1.0]]).unwrap();
    assert!(GaussianSpec::new(vec![0.0, 0.0], asym).is_err());
}

#[test]
fn gaussian_formula_is_the_one_dimensional_limit_of_samples() {
    // commuting case in one dimension: W = (μx − μy)² + (σx − σy)²
    let gx = GaussianSpec::new(vec![0.0], Matrix::diagonal(&[1.0])).unwrap();
    let gy = GaussianSpec::new(vec![0.5], Matrix::diagonal(&[2.25])).unwrap();
    let exact = gaussian_wasserstein(&gx, &gy).unwrap();
    assert!((exact - 0.5).abs() < 1e-12);
    let x = sparda_core::synth::gaussian_sample(&gx, 20000, 1).unwrap();
    let y = sparda_core::synth::gaussian_sample(&gy, 20000, 2).unwrap();
    let est = wasserstein1d(&x.matrix().column(0), &y.matrix().column(0)).unwrap();
    assert!((est - exact).abs() < 0.03, "{est}");
}

fn finite_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_len)
}

fn sample_pair() -> impl Strategy<Value = (SampleSet, SampleSet, Vec<f64>)> {
    (1usize..7, 1usize..7, 1usize..4).prop_flat_map(|(n, m, d)| {
        (
            prop::collection::vec(-3.0f64..3.0, n * d),
            prop::collection::vec(-3.0f64..3.0, m * d),
            prop::collection::vec(-1.0f64..1.0, d),
        )
            .prop_map(move |(a, b, beta)| (SampleSet::new(n, d, a).unwrap(), SampleSet::new(m, d, b).unwrap(), beta))
    })
}

proptest! {
    #[test]
    fn symmetric(a in finite_vec(10), b in finite_vec(10)) {
        prop_assert_eq!(wasserstein1d(&a, &b).unwrap(), wasserstein1d(&b, &a).unwrap());
    }

    #[test]
    fn translation_invariant(a in finite_vec(10), b in finite_vec(10), c in -10.0f64..10.0) {
        let w = wasserstein1d(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v + c).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + c).collect();
        prop_assert!((wasserstein1d(&a2, &b2).unwrap() - w).abs() <= 1e-10 * w.max(1.0));
    }

    #[test]
    fn quadratic_scaling(a in finite_vec(10), b in finite_vec(10), s in 0.01f64..10.0) {
        let w = wasserstein1d(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v * s).collect();
        let b2: Vec<f64> = b.iter().map(|v| v * s).collect();
        prop_assert!((wasserstein1d(&a2, &b2).unwrap() - s * s * w).abs() <= 1e-10 * (s * s * w).max(1.0));
    }

    #[test]
    fn coupling_marginals_and_support(n in 1usize..40, m in 1usize..40) {
        let c = quantile_coupling(n, m).unwrap();
        prop_assert!(c.entries.len() <= n + m - 1);
        for r in c.row_sums() { prop_assert!((r - 1.0 / n as f64).abs() <= 1e-12); }
        for s in c.column_sums() { prop_assert!((s - 1.0 / m as f64).abs() <= 1e-12); }
        let total: f64 = c.entries.iter().map(|e| e.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        // monotone: both indices never decrease along the list
        for w in c.entries.windows(2) {
            prop_assert!(w[1].i >= w[0].i && w[1].j >= w[0].j);
        }
    }

    #[test]
    fn objective_sign_and_scale((x, y, beta) in sample_pair(), s in 0.05f64..1.0) {
        prop_assume!(beta.iter().any(|&v| v != 0.0));
        let neg: Vec<f64> = beta.iter().map(|v| -v).collect();
        let j = objective(&x, &y, &beta).unwrap();
        prop_assert_eq!(objective(&x, &y, &neg).unwrap().to_bits(), j.to_bits());
        let scaled: Vec<f64> = beta.iter().map(|v| v * s).collect();
        prop_assert!((objective(&x, &y, &scaled).unwrap() - s * s * j).abs() <= 1e-10 * j.max(1.0));
    }

    #[test]
    fn objective_is_wasserstein_of_projections((x, y, beta) in sample_pair()) {
        let j = objective(&x, &y, &beta).unwrap();
        let w = wasserstein1d(&projected(&x, &beta), &projected(&y, &beta)).unwrap();
        prop_assert!((j - w).abs() <= 1e-10 * w.max(1.0));
    }
}
