//! Command-line front end for `sparda-core`: reads two CSV sample files,
//! runs analyses, permutation tests and penalty cross-validation, and writes
//! JSON or CSV reports.

pub mod args;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};
use sparda_core::inference::{null_mode, permutation_test_with, NullMode};
use sparda_core::relax::{BSupergradient, DualScale, StopReason};
use sparda_core::synth::{wishart_blocks_dataset, ScenarioKind, ScenarioSpec};
use sparda_core::transport::uniform_transport_cost;
use sparda_core::{
    cross_validate_lambda, default_lambda_grid, gradient, objective, pda_analyze, project, run_pipeline,
    AnalysisResult, CvResult, LambdaChoice, Matrix, PermutationReport, PipelineConfig, RelaxConfig, SampleSet,
    TightenSettings,
};

use crate::args::*;
use crate::io::{format_value, load_table, write_samples};

/// A finished command: the JSON document and its CSV rendering.
struct Report {
    json: Value,
    csv: String,
}

/// Runs a parsed command line, writing the report to `--out` or standard output.
pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let (report, format, out) = match &cli.command {
        Command::Analyze(a) => (analyze(a)?, a.output.format, a.output.out.clone()),
        Command::Permtest(a) => (permtest(a)?, a.output.format, a.output.out.clone()),
        Command::Cv(a) => (cv(a)?, a.output.format, a.output.out.clone()),
        Command::Synth(a) => (synth(a)?, a.format, None),
        Command::Oracle(a) => (oracle(a)?, a.output.format, a.output.out.clone()),
    };
    let text = match format {
        Format::Json => {
            let mut json = report.json;
            json["meta"]["wall_clock_seconds"] = json!(started.elapsed().as_secs_f64());
            let mut s = serde_json::to_string_pretty(&json)?;
            s.push('\n');
            s
        }
        Format::Csv => report.csv,
    };
    match out {
        Some(path) => fs::write(&path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    x: SampleSet,
    y: SampleSet,
    names: Vec<String>,
}

fn load_pair(inputs: &Inputs) -> Result<Loaded> {
    let tx = load_table(&inputs.x).with_context(|| format!("loading {}", inputs.x.display()))?;
    let ty = load_table(&inputs.y).with_context(|| format!("loading {}", inputs.y.display()))?;
    if tx.samples.d() != ty.samples.d() {
        bail!("{} has {} columns but {} has {}", inputs.x.display(), tx.samples.d(), inputs.y.display(), ty.samples.d());
    }
    let d = tx.samples.d();
    let names = tx.header.unwrap_or_else(|| (0..d).map(|k| format!("feature_{k}")).collect());
    Ok(Loaded { x: tx.samples, y: ty.samples, names })
}

fn relax_config(solver: &SolverArgs, seed: u64) -> RelaxConfig {
    let base = RelaxConfig::default();
    RelaxConfig {
        lambda: solver.lambda.unwrap_or(base.lambda),
        gamma: solver.gamma.unwrap_or(base.gamma),
        eta: solver.eta.unwrap_or(base.eta),
        patience: solver.patience.unwrap_or(base.patience),
        max_iter: solver.max_iter.unwrap_or(base.max_iter),
        incremental_batch: solver.batch.or(base.incremental_batch),
        seed,
        ..base
    }
}

fn pipeline(solver: &SolverArgs, cv: Option<&CvOptions>, seed: u64) -> PipelineConfig {
    let relax = relax_config(solver, seed);
    let lambda = match cv {
        Some(o) => LambdaChoice::CrossValidated { grid: o.grid.clone(), folds: o.folds },
        None => LambdaChoice::Fixed(relax.lambda),
    };
    PipelineConfig { relax, tighten: TightenSettings { k: solver.k, ..TightenSettings::default() }, lambda }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn relax_json(r: &RelaxConfig) -> Value {
    json!({
        "lambda": r.lambda,
        "gamma": r.gamma,
        "eta": r.eta,
        "dual_scale": match r.dual_scale { DualScale::Absolute => "absolute", DualScale::Relative => "relative" },
        "patience": r.patience,
        "max_iter": r.max_iter,
        "dual_steps_per_b": r.dual_steps_per_b,
        "dual_warmup": r.dual_warmup,
        "b_supergradient": match r.b_supergradient {
            BSupergradient::LastPass => "last_pass",
            BSupergradient::PassAverage => "pass_average",
        },
        "incremental_batch": r.incremental_batch,
        "seed": r.seed,
    })
}

fn tighten_json(t: &TightenSettings) -> Value {
    json!({
        "k": t.k,
        "step0": t.step0,
        "max_iter": t.max_iter,
        "tol": t.tol,
        "stall_window": t.stall_window,
        "zero_threshold": t.zero_threshold,
    })
}

fn pipeline_json(p: &PipelineConfig) -> Value {
    let lambda = match &p.lambda {
        LambdaChoice::Fixed(l) => json!({ "fixed": l }),
        LambdaChoice::CrossValidated { grid, folds } => json!({ "cross_validated": { "grid": grid, "folds": folds } }),
    };
    json!({ "relax": relax_json(&p.relax), "tighten": tighten_json(&p.tighten), "lambda": lambda })
}

fn meta(command: &str, seed: u64, config: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config": config,
    })
}

/// Feature indices ordered by decreasing `|weight|`, lowest index first on ties.
fn ranked(beta: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..beta.len()).collect();
    idx.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    idx
}

fn weights_json(beta: &[f64], names: &[String]) -> Value {
    ranked(beta)
        .into_iter()
        .map(|k| json!({ "feature": k, "name": names[k], "weight": beta[k] }))
        .collect()
}

fn weights_csv(beta: &[f64], names: &[String]) -> String {
    let mut out = String::from("rank,feature,name,weight\n");
    for (rank, k) in ranked(beta).into_iter().enumerate() {
        out.push_str(&format!("{},{},{},{}\n", rank + 1, k, names[k], format_value(beta[k])));
    }
    out
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Patience => "patience",
        StopReason::MaxIter => "max_iter",
    }
}

fn analysis_fields(a: &AnalysisResult, names: &[String]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("beta".into(), json!(&a.beta[..]));
    m.insert("divergence".into(), json!(a.divergence));
    m.insert("k_effective".into(), json!(a.k_effective));
    m.insert("lambda".into(), json!(a.lambda_used));
    m.insert("weights".into(), weights_json(&a.beta, names));
    m.insert(
        "relax".into(),
        json!({
            "beta": &a.relax_beta[..],
            "divergence": a.relax_divergence,
            "iterations": a.relax_trace.iterations,
            "best_iteration": a.relax_trace.best_iteration,
            "stop": stop_name(a.relax_trace.stop),
        }),
    );
    m.insert("tightened_divergence".into(), json!(a.tightened_divergence));
    m.insert("tighten_iterations".into(), json!(a.tighten_iterations));
    m
}

fn cv_json(cv: &CvResult) -> Value {
    json!({
        "lambda_star": cv.lambda_star,
        "table": cv.table.iter().map(|r| json!({
            "lambda": r.lambda,
            "mean": r.mean,
            "folds": r.fold_divergences,
        })).collect::<Vec<_>>(),
    })
}

fn cv_csv(cv: &CvResult) -> String {
    let folds = cv.table.first().map_or(0, |r| r.fold_divergences.len());
    let mut out = String::from("lambda,mean");
    for f in 0..folds {
        out.push_str(&format!(",fold_{f}"));
    }
    out.push('\n');
    for r in &cv.table {
        let mut cells = vec![format_value(r.lambda), format_value(r.mean)];
        cells.extend(r.fold_divergences.iter().map(|&v| format_value(v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn inputs_json(inputs: &Inputs) -> Value {
    json!({ "x": path_str(&inputs.x), "y": path_str(&inputs.y) })
}

fn analyze(a: &AnalyzeArgs) -> Result<Report> {
    let data = load_pair(&a.inputs)?;
    let seed = a.output.seed;
    let cfg = pipeline(&a.solver, a.cv.then_some(&a.cv_options), seed);
    let run = run_pipeline(&data.x, &data.y, &cfg, seed)?;
    let mut doc = analysis_fields(&run.analysis, &data.names);
    if let Some(cv) = &run.cv {
        doc.insert("cv".into(), cv_json(cv));
    }
    let config = json!({ "inputs": inputs_json(&a.inputs), "pipeline": pipeline_json(&cfg) });
    doc.insert("meta".into(), meta("analyze", seed, config));
    Ok(Report { json: Value::Object(doc), csv: weights_csv(&run.analysis.beta, &data.names) })
}

fn null_label(mode: NullMode) -> &'static str {
    match mode {
        NullMode::Reselected => "reselected",
        NullMode::FixedLambda => "fixed-λ null",
    }
}

fn permtest(a: &PermtestArgs) -> Result<Report> {
    let data = load_pair(&a.inputs)?;
    let seed = a.output.seed;
    let requested = pipeline(&a.solver, a.cv.then_some(&a.cv_options), seed);
    // a fixed-λ null picks the penalty once, on the observed labels
    let (cfg, cv) = if a.fixed_lambda_null {
        let run = run_pipeline(&data.x, &data.y, &requested, seed)?;
        let cv = run.cv.expect("cross-validation requested");
        let mut fixed = requested.clone();
        fixed.lambda = LambdaChoice::Fixed(cv.lambda_star);
        fixed.relax.lambda = cv.lambda_star;
        (fixed, Some(cv))
    } else {
        (requested.clone(), None)
    };

    let mut observed: Option<(AnalysisResult, Option<CvResult>)> = None;
    let report: PermutationReport =
        permutation_test_with(&data.x, &data.y, a.perms, seed, null_mode(&cfg), |x, y, s| {
            let run = run_pipeline(x, y, &cfg, s)?;
            let stat = run.analysis.divergence;
            if observed.is_none() {
                observed = Some((run.analysis, run.cv));
            }
            Ok(stat)
        })?;
    let (analysis, observed_cv) = observed.expect("observed statistic is computed first");

    let mut doc = Map::new();
    doc.insert("p_value".into(), json!(report.p_value));
    doc.insert("observed_stat".into(), json!(report.observed_stat));
    doc.insert("null_stats".into(), json!(report.null_stats));
    doc.insert("n_permutations".into(), json!(report.n_permutations));
    doc.insert("null_mode".into(), json!(null_label(report.null_mode)));
    doc.extend(analysis_fields(&analysis, &data.names));
    if let Some(cv) = cv.as_ref().or(observed_cv.as_ref()) {
        doc.insert("cv".into(), cv_json(cv));
    }
    let config = json!({
        "inputs": inputs_json(&a.inputs),
        "pipeline": pipeline_json(&requested),
        "perms": a.perms,
        "fixed_lambda_null": a.fixed_lambda_null,
    });
    doc.insert("meta".into(), meta("permtest", seed, config));

    let mut csv = format!("kind,index,statistic\nobserved,,{}\n", format_value(report.observed_stat));
    for (i, s) in report.null_stats.iter().enumerate() {
        csv.push_str(&format!("null,{i},{}\n", format_value(*s)));
    }
    Ok(Report { json: Value::Object(doc), csv })
}

fn cv(a: &CvArgs) -> Result<Report> {
    let data = load_pair(&a.inputs)?;
    let seed = a.output.seed;
    let relax = relax_config(&a.solver, seed);
    let tighten = TightenSettings { k: a.solver.k, ..TightenSettings::default() };
    let grid = match &a.cv_options.grid {
        Some(g) => g.clone(),
        None => default_lambda_grid(&data.x, &data.y, sparda_core::inference::DEFAULT_GRID_SIZE)?,
    };
    let result = cross_validate_lambda(&data.x, &data.y, &grid, a.cv_options.folds, seed, &relax, &tighten)?;
    let refit = pda_analyze(&data.x, &data.y, &RelaxConfig { lambda: result.lambda_star, ..relax.clone() }, &tighten)?;

    let mut doc = analysis_fields(&refit, &data.names);
    doc.insert("lambda_star".into(), json!(result.lambda_star));
    doc.insert("table".into(), cv_json(&result)["table"].clone());
    let config = json!({
        "inputs": inputs_json(&a.inputs),
        "relax": relax_json(&relax),
        "tighten": tighten_json(&tighten),
        "grid": grid,
        "folds": a.cv_options.folds,
    });
    doc.insert("meta".into(), meta("cv", seed, config));
    Ok(Report { json: Value::Object(doc), csv: cv_csv(&result) })
}

fn matrix_json(m: &Matrix) -> Value {
    (0..m.rows()).map(|r| json!(m.row(r))).collect()
}

fn synth(a: &SynthArgs) -> Result<Report> {
    let m = a.m.unwrap_or(a.n);
    let kind = match a.scenario {
        ScenarioName::Figure1a => ScenarioKind::Figure1a,
        ScenarioName::WishartBlocks => ScenarioKind::WishartBlocks { ell: a.ell },
        ScenarioName::MeanShift => ScenarioKind::MeanShift { shift: a.shift.clone(), noise_variance: a.noise_variance },
        ScenarioName::VarianceShift => ScenarioKind::VarianceShift { d: a.d, factor: a.factor },
        ScenarioName::NullIdentical => ScenarioKind::NullIdentical { d: a.d },
    };
    let scenario_name = a.scenario.to_possible_value().expect("no skipped variants").get_name().to_string();
    let spec = ScenarioSpec { kind: kind.clone(), n: a.n, m, seed: a.seed };
    let scenario = spec.generate()?;

    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let x_path: PathBuf = a.out.join("x.csv");
    let y_path: PathBuf = a.out.join("y.csv");
    write_samples(&x_path, &scenario.x).with_context(|| format!("cannot write {}", x_path.display()))?;
    write_samples(&y_path, &scenario.y).with_context(|| format!("cannot write {}", y_path.display()))?;

    let mut doc = Map::new();
    doc.insert("scenario".into(), json!(scenario_name));
    doc.insert("x".into(), json!(path_str(&x_path)));
    doc.insert("y".into(), json!(path_str(&y_path)));
    doc.insert("n".into(), json!(a.n));
    doc.insert("m".into(), json!(m));
    doc.insert("d".into(), json!(scenario.x.d()));
    doc.insert("relevant".into(), json!(scenario.relevant));
    if let ScenarioKind::WishartBlocks { ell } = kind {
        let w = wishart_blocks_dataset(ell, a.n, m, a.seed)?;
        doc.insert("covariance_x".into(), matrix_json(&w.covariance_x));
        doc.insert("covariance_y".into(), matrix_json(&w.covariance_y));
    }
    let params = match &spec.kind {
        ScenarioKind::Figure1a => json!({}),
        ScenarioKind::WishartBlocks { ell } => json!({ "ell": ell }),
        ScenarioKind::MeanShift { shift, noise_variance } => json!({ "shift": shift, "noise_variance": noise_variance }),
        ScenarioKind::VarianceShift { d, factor } => json!({ "d": d, "factor": factor }),
        ScenarioKind::NullIdentical { d } => json!({ "d": d }),
    };
    let config = json!({ "scenario": scenario_name, "n": a.n, "m": m, "params": params, "out": path_str(&a.out) });
    doc.insert("meta".into(), meta("synth", a.seed, config));

    let csv = format!(
        "population,path,rows,columns\nx,{},{},{}\ny,{},{},{}\n",
        path_str(&x_path),
        scenario.x.n(),
        scenario.x.d(),
        path_str(&y_path),
        scenario.y.n(),
        scenario.y.d()
    );
    Ok(Report { json: Value::Object(doc), csv })
}

fn oracle(a: &OracleArgs) -> Result<Report> {
    let data = load_pair(&a.inputs)?;
    if a.beta.len() != data.x.d() {
        bail!("--beta has {} entries but the samples have {} features", a.beta.len(), data.x.d());
    }
    if !(a.h > 0.0 && a.h.is_finite()) {
        bail!("--h must be positive");
    }
    let beta = &a.beta;
    let sorted = objective(&data.x, &data.y, beta)?;
    let px = project(&data.x, beta)?;
    let py = project(&data.y, beta)?;
    let mut costs = Matrix::zeros(px.len(), py.len());
    for (i, a_i) in px.iter().enumerate() {
        for (j, b_j) in py.iter().enumerate() {
            costs[(i, j)] = (a_i - b_j) * (a_i - b_j);
        }
    }
    let lp = uniform_transport_cost(&costs)?;
    let analytic = gradient(&data.x, &data.y, beta)?;
    let mut fd = Vec::with_capacity(beta.len());
    for k in 0..beta.len() {
        let mut plus = beta.clone();
        let mut minus = beta.clone();
        plus[k] += a.h;
        minus[k] -= a.h;
        fd.push((objective(&data.x, &data.y, &plus)? - objective(&data.x, &data.y, &minus)?) / (2.0 * a.h));
    }
    let grad_err = analytic.iter().zip(&fd).map(|(g, f)| (g - f).abs()).fold(0.0, f64::max);

    let mut doc = Map::new();
    doc.insert("beta".into(), json!(beta));
    doc.insert("objective".into(), json!(sorted));
    doc.insert("transport_lp".into(), json!(lp));
    doc.insert("objective_gap".into(), json!((sorted - lp).abs()));
    doc.insert("gradient".into(), json!(analytic));
    doc.insert("finite_difference".into(), json!(fd));
    doc.insert("gradient_max_abs_error".into(), json!(grad_err));
    let config = json!({ "inputs": inputs_json(&a.inputs), "beta": beta, "h": a.h });
    doc.insert("meta".into(), meta("oracle", a.output.seed, config));

    let mut csv = String::from("quantity,value\n");
    csv.push_str(&format!("objective,{}\ntransport_lp,{}\n", format_value(sorted), format_value(lp)));
    for (k, (g, f)) in analytic.iter().zip(&fd).enumerate() {
        csv.push_str(&format!("gradient_{k},{}\nfinite_difference_{k},{}\n", format_value(*g), format_value(*f)));
    }
    Ok(Report { json: Value::Object(doc), csv })
}
