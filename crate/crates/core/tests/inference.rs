mod common;

use proptest::prelude::*;
use sparda_core::inference::{null_mode, permutation_test_with, permuted_labels, NullMode};
use sparda_core::synth::{ScenarioKind, ScenarioSpec};
use sparda_core::{
    cross_validate_lambda, objective, pda_analyze, permutation_test, run_pipeline, LambdaChoice, PipelineConfig,
    RelaxConfig, SampleSet, TightenSettings,
};

fn point_masses(mu: &[f64], n: usize) -> (SampleSet, SampleSet) {
    let x = SampleSet::new(n, mu.len(), vec![0.0; n * mu.len()]).unwrap();
    let y = SampleSet::new(n, mu.len(), mu.repeat(n)).unwrap();
    (x, y)
}

fn scenario(kind: ScenarioKind, n: usize, seed: u64) -> (SampleSet, SampleSet) {
    let s = ScenarioSpec { kind, n, m: n, seed }.generate().unwrap();
    (s.x, s.y)
}

fn mean_shift(n: usize, seed: u64) -> (SampleSet, SampleSet) {
    scenario(ScenarioKind::MeanShift { shift: vec![2.0, 0.0, 0.0, 0.0, 0.0], noise_variance: 0.01 }, n, seed)
}

#[test]
fn point_mass_shift_is_found() {
    let (x, y) = point_masses(&[2.0, 0.0, 0.0, 0.0, 0.0], 10);
    let r = pda_analyze(&x, &y, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert!(r.beta[0] / r.beta.norm() >= 0.99, "{:?}", r.beta);
    assert!((r.divergence - 4.0).abs() <= 0.02 * 4.0);
    assert_eq!(r.k_effective, 5);
}

#[test]
fn duplicated_samples_have_no_divergence() {
    let mut rng = common::rng(3);
    let x = common::uniform_samples(&mut rng, 30, 4, -1.0, 1.0);
    let r = pda_analyze(&x, &x.clone(), &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert!(r.divergence <= 1e-8);
}

#[test]
fn variance_shift_direction() {
    let (x, y) = scenario(ScenarioKind::VarianceShift { d: 3, factor: 4.0 }, 2000, 0);
    // sampled pairs keep the 4·10⁶-pair problem cheap
    let relax = RelaxConfig { incremental_batch: Some(4000), ..RelaxConfig::default() };
    let r = pda_analyze(&x, &y, &relax, &TightenSettings::default()).unwrap();
    assert!(r.beta[0].abs() >= 0.9, "{:?}", r.beta);
}

#[test]
fn noisy_mean_shift_direction() {
    let (x, y) = mean_shift(200, 1);
    let r = pda_analyze(&x, &y, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert!(r.beta[0].abs() >= 0.95);
    assert!((r.divergence - 4.0).abs() <= 0.4);
}

#[test]
fn penalized_analysis_reports_its_settings() {
    let (x, y) = mean_shift(60, 2);
    let relax = RelaxConfig { lambda: 0.01, ..RelaxConfig::default() };
    let r = pda_analyze(&x, &y, &relax, &TightenSettings::default()).unwrap();
    assert_eq!(r.lambda_used, 0.01);
    assert!(r.k_effective >= 1 && r.k_effective <= 5);
    assert!(r.beta.iter().filter(|&&c| c != 0.0).count() <= 5);
    let fixed = TightenSettings { k: Some(2), ..TightenSettings::default() };
    let r = pda_analyze(&x, &y, &relax, &fixed).unwrap();
    assert_eq!(r.k_effective, 2);
}

#[test]
fn singleton_grid_returns_its_value() {
    let (x, y) = mean_shift(30, 0);
    let cv = cross_validate_lambda(&x, &y, &[0.0], 3, 0, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert_eq!(cv.lambda_star, 0.0);
    assert_eq!(cv.table.len(), 1);
    assert_eq!(cv.table[0].fold_divergences.len(), 3);
}

#[test]
fn cross_validation_table_and_ties() {
    let (x, y) = mean_shift(40, 4);
    let grid = [0.0, 0.0];
    let cv = cross_validate_lambda(&x, &y, &grid, 4, 9, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert_eq!(cv.table[0].mean, cv.table[1].mean);
    for row in &cv.table {
        let mean = row.fold_divergences.iter().sum::<f64>() / 4.0;
        assert!((row.mean - mean).abs() <= 1e-12);
        // a clear shift survives holding out a quarter of the data
        assert!(row.mean > 3.0);
    }
    let again = cross_validate_lambda(&x, &y, &grid, 4, 9, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert_eq!(cv, again);
    assert!(cross_validate_lambda(&x, &y, &grid, 30, 9, &RelaxConfig::default(), &TightenSettings::default()).is_err());
}

#[test]
fn pipeline_runs_cross_validation_when_asked() {
    let (x, y) = mean_shift(40, 5);
    let cfg = PipelineConfig {
        lambda: LambdaChoice::CrossValidated { grid: Some(vec![0.0, 0.5]), folds: 2 },
        ..PipelineConfig::pda()
    };
    let run = run_pipeline(&x, &y, &cfg, 1).unwrap();
    let cv = run.cv.unwrap();
    assert_eq!(run.analysis.lambda_used, cv.lambda_star);
    assert_eq!(null_mode(&cfg), NullMode::Reselected);
    assert_eq!(null_mode(&PipelineConfig::fixed(0.3)), NullMode::FixedLambda);
}

#[test]
fn strong_shift_gets_the_smallest_p_value() {
    let (x, y) = mean_shift(40, 6);
    let report = permutation_test(&x, &y, &PipelineConfig::pda(), 19, 3).unwrap();
    assert_eq!(report.p_value, 0.05);
    assert_eq!(report.null_stats.len(), 19);
    assert_eq!(report, permutation_test(&x, &y, &PipelineConfig::pda(), 19, 3).unwrap());
}

#[test]
fn extreme_observed_values() {
    let (x, y) = point_masses(&[1.0, 0.0], 3);
    let below = permutation_test_with(&x, &y, 10, 0, NullMode::FixedLambda, |_, _, s| Ok(if s == 0 { -1.0 } else { 1.0 })).unwrap();
    assert_eq!(below.p_value, 1.0);
    let above = permutation_test_with(&x, &y, 99, 0, NullMode::FixedLambda, |_, _, s| Ok(if s == 0 { 2.0 } else { 1.0 })).unwrap();
    assert_eq!(above.p_value, 0.01);
}

fn reorder(s: &SampleSet, order: &[usize]) -> SampleSet {
    s.select(order).unwrap()
}

#[test]
fn row_order_does_not_matter() {
    let (x, y) = mean_shift(30, 7);
    let mut rng = common::rng(8);
    use rand::seq::SliceRandom;
    let mut px: Vec<usize> = (0..30).collect();
    let mut py: Vec<usize> = (0..30).collect();
    px.shuffle(&mut rng);
    py.shuffle(&mut rng);
    let (xs, ys) = (reorder(&x, &px), reorder(&y, &py));

    let beta = [0.8, 0.6, 0.0, 0.0, 0.0];
    let stat = |a: &SampleSet, b: &SampleSet, _: u64| objective(a, b, &beta);
    let original = permutation_test_with(&x, &y, 30, 5, NullMode::FixedLambda, stat).unwrap();
    let shuffled = permutation_test_with(&xs, &ys, 30, 5, NullMode::FixedLambda, stat).unwrap();
    assert!((original.observed_stat - shuffled.observed_stat).abs() <= 1e-10);

    // the same label draw, read through the row shuffle, gives the same split
    let pooled = x.concat(&y).unwrap();
    let to_original: Vec<usize> = px.iter().copied().chain(py.iter().map(|j| j + 30)).collect();
    for (p, &null) in shuffled.null_stats.iter().enumerate() {
        let labels = permuted_labels(30, 30, 5, p as u64);
        let mapped: Vec<usize> = labels.iter().map(|&i| to_original[i]).collect();
        let a = pooled.select(&mapped[..30]).unwrap();
        let b = pooled.select(&mapped[30..]).unwrap();
        assert!((objective(&a, &b, &beta).unwrap() - null).abs() <= 1e-10);
    }

    let r1 = pda_analyze(&x, &y, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    let r2 = pda_analyze(&xs, &ys, &RelaxConfig::default(), &TightenSettings::default()).unwrap();
    assert!((r1.divergence - r2.divergence).abs() <= 1e-10 * r1.divergence);
}

fn sd(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn divergence_along_a_fixed_direction_concentrates() {
    let beta = [1.0, 0.0, 0.0, 0.0, 0.0];
    let kind = ScenarioKind::MeanShift { shift: vec![2.0, 0.0, 0.0, 0.0, 0.0], noise_variance: 1.0 };
    let spread = |n: usize| {
        let stats: Vec<f64> = (0..50)
            .map(|seed| {
                let (x, y) = scenario(kind.clone(), n, 1000 + seed);
                objective(&x, &y, &beta).unwrap()
            })
            .collect();
        sd(&stats)
    };
    let (small, large) = (spread(500), spread(2000));
    assert!(small <= 5.0 * large);
    assert!(large < small, "{large} vs {small}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_output_invariants(seed in 0u64..1000, n in 4usize..12, d in 1usize..4, lambda in prop::sample::select(vec![0.0, 0.05])) {
        let mut rng = common::rng(seed);
        let x = common::uniform_samples(&mut rng, n, d, -2.0, 2.0);
        let y = common::uniform_samples(&mut rng, n + 2, d, -1.0, 3.0);
        let relax = RelaxConfig { lambda, max_iter: 300, ..RelaxConfig::default() };
        let r = pda_analyze(&x, &y, &relax, &TightenSettings::default()).unwrap();
        prop_assert!(r.beta.norm() <= 1.0 + 1e-9);
        let first = r.beta.iter().find(|&&c| c != 0.0).copied().unwrap_or(0.0);
        prop_assert!(first >= 0.0);
        prop_assert!((objective(&x, &y, &r.beta).unwrap() - r.divergence).abs() <= 1e-10);
        prop_assert!(r.divergence >= r.relax_divergence);
    }

    #[test]
    fn p_values_are_bounded_and_reproducible(seed in any::<u64>(), n_perm in 1usize..40) {
        let (x, y) = point_masses(&[1.0, 0.5], 3);
        let beta = [0.6, 0.8];
        let stat = |a: &SampleSet, b: &SampleSet, _: u64| objective(a, b, &beta);
        let r = permutation_test_with(&x, &y, n_perm, seed, NullMode::FixedLambda, stat).unwrap();
        prop_assert!(r.p_value >= 1.0 / (1 + n_perm) as f64 && r.p_value <= 1.0);
        let exceed = r.null_stats.iter().filter(|&&s| s >= r.observed_stat).count();
        prop_assert_eq!(r.p_value, (1 + exceed) as f64 / (1 + n_perm) as f64);
        prop_assert_eq!(&r, &permutation_test_with(&x, &y, n_perm, seed, NullMode::FixedLambda, stat).unwrap());
    }
}
