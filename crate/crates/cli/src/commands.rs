use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sketched_okr::data_io::{
    load_config, load_model, save_matrix_with_csv, save_model, write_sorted_json, EvalSample, KernelSide, MetricName, RunConfig, MODEL_CORE,
};
use sketched_okr::decode::CandidateSet;
use sketched_okr::diagnostics::{effective_dimension, sketch_size_sweep, sweep_csv};
use sketched_okr::experiment::{
    bench_csv, output_seed, run_bench_cell, timed_median, BenchCell, BenchProblem,
};
use sketched_okr::kernels::{gram, kernel_diag, GramMatrix, KernelSpec};
use sketched_okr::regression::{fit, FittedModel, RidgeConfig, Variant};
use sketched_okr::sketch::{draw, SketchSpec};
use sketched_okr::synthetic::{generate, SyntheticSpec};

use crate::evaluate::evaluate;
use crate::problem::{fold_indices, load_raw, Problem, RawData, Split, SplitName};

// ---------------------------------------------------------------------------
// shared pieces

pub struct SketchPair {
    pub input: Option<SketchSpec>,
    pub output: Option<SketchSpec>,
}

/// `--seed` replaces the configured sketch seeds; the output sketch gets a
/// derived seed so the two sides stay independent.
pub fn sketch_pair(cfg: &RunConfig, seed: Option<u64>) -> SketchPair {
    SketchPair {
        input: cfg.input_sketch.map(|s| seed.map_or(s, |v| s.with_seed(v))),
        output: cfg
            .output_sketch
            .map(|s| seed.map_or(s, |v| s.with_seed(output_seed(v)))),
    }
}

pub fn fit_with(
    variant: Variant,
    problem: &Problem,
    sketches: &SketchPair,
    ridge: &RidgeConfig,
) -> Result<FittedModel> {
    let n = problem.n_train();
    let r_x = if variant.sketches_input() {
        let spec = sketches.input.context("variant needs an input sketch")?;
        Some(draw(&spec, n)?)
    } else {
        None
    };
    let r_y = if variant.sketches_output() {
        let spec = sketches.output.context("variant needs an output sketch")?;
        Some(draw(&spec, n)?)
    } else {
        None
    };
    Ok(fit(
        variant,
        &problem.k_x,
        &problem.k_y,
        r_x.as_ref(),
        r_y.as_ref(),
        ridge,
    )?)
}

fn default_metrics(cfg: &RunConfig, raw: &RawData) -> Vec<MetricName> {
    if !cfg.metrics.is_empty() {
        return cfg.metrics.clone();
    }
    match raw {
        RawData::Features { .. } if cfg.output_kernel == KernelSpec::Linear => vec![MetricName::Mse],
        _ => vec![MetricName::Top1],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionRow {
    pub sigma2: Option<f64>,
    pub lambda: f64,
    pub score: Option<f64>,
}

pub struct Selected {
    pub problem: Problem,
    pub lambda: f64,
    pub metric: MetricName,
    pub table: Vec<SelectionRow>,
}

fn width_of(k: &KernelSpec) -> Option<f64> {
    match *k {
        KernelSpec::Gaussian { sigma2 } | KernelSpec::TanimotoGaussian { sigma2 } => Some(sigma2),
        _ => None,
    }
}

/// Grid search over input widths and lambdas, scored on the validation
/// split, or by k-fold averaging over the training set when there is none.
pub fn select(cfg: &RunConfig, raw: &RawData, variant: Variant, sketches: &SketchPair) -> Result<Selected> {
    let metric = default_metrics(cfg, raw)[0];
    let kernels: Vec<KernelSpec> = if cfg.input_width_grid.is_empty() {
        vec![cfg.input_kernel]
    } else {
        if width_of(&cfg.input_kernel).is_none() {
            bail!("input_width_grid needs a kernel with a width");
        }
        cfg.input_width_grid.iter().map(|&w| cfg.input_kernel.with_width(w)).collect()
    };
    let single = kernels.len() * cfg.lambda_grid.len() == 1;
    if !single && !raw.has_validation() && cfg.folds.is_none() {
        bail!("hyperparameter grid needs a validation split or `folds`");
    }
    let mut table = Vec::new();
    let mut best: Option<(f64, Problem, f64)> = None;
    for kernel in kernels {
        let problem = raw.problem(cfg, kernel)?;
        let mut best_here: Option<(f64, f64)> = None;
        for &lambda in &cfg.lambda_grid {
            let ridge = RidgeConfig {
                lambda,
                solve: cfg.solve,
            };
            let score = if single {
                None
            } else {
                Some(score_point(cfg, &problem, variant, sketches, &ridge, metric)?)
            };
            table.push(SelectionRow {
                sigma2: width_of(&kernel),
                lambda,
                score,
            });
            let s = score.unwrap_or(0.0);
            let signed = if metric.maximize() { -s } else { s };
            if best_here.is_none_or(|(b, _)| signed < b) {
                best_here = Some((signed, lambda));
            }
        }
        let (signed, lambda) = best_here.unwrap();
        if best.as_ref().is_none_or(|(b, _, _)| signed < *b) {
            best = Some((signed, problem, lambda));
        }
    }
    let (_, problem, lambda) = best.unwrap();
    Ok(Selected {
        problem,
        lambda,
        metric,
        table,
    })
}

fn score_point(
    cfg: &RunConfig,
    problem: &Problem,
    variant: Variant,
    sketches: &SketchPair,
    ridge: &RidgeConfig,
    metric: MetricName,
) -> Result<f64> {
    let value = |model: &FittedModel, p: &Problem, split: &Split| -> Result<f64> {
        let e = evaluate(model, p, split, &[metric])?;
        Ok(e.metrics[metric.key()])
    };
    if let Some(val) = &problem.val {
        let model = fit_with(variant, problem, sketches, ridge)?;
        return value(&model, problem, val);
    }
    let folds = cfg.folds.context("no validation split")?;
    let n = problem.n_train();
    let mut total = 0.0;
    for f in 0..folds {
        let (train, held) = fold_indices(n, folds, f);
        let (sub, split) = problem.fold(&train, &held, &cfg.candidates)?;
        let model = fit_with(variant, &sub, sketches, ridge)?;
        total += value(&model, &sub, &split)?;
    }
    Ok(total / folds as f64)
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn insert_metrics(report: &mut Map<String, Value>, metrics: &std::collections::BTreeMap<String, f64>) {
    for (k, v) in metrics {
        report.insert(k.clone(), json!(v));
    }
}

// ---------------------------------------------------------------------------
// commands

pub struct SynthArgs {
    pub config: Option<std::path::PathBuf>,
    pub n: usize,
    pub n_val: usize,
    pub n_te: usize,
    pub d: usize,
    pub seed: Option<u64>,
}

pub fn synth(args: &SynthArgs, out: &Path) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            match serde_json::from_str::<SyntheticSpec>(&text) {
                Ok(s) => s,
                Err(_) => match RunConfig::from_json(&text)?.data {
                    sketched_okr::data_io::DataSource::Synthetic(s) => s,
                    _ => bail!("config data source is not synthetic"),
                },
            }
        }
        None => SyntheticSpec::new(args.n, args.n_val, args.n_te, args.d, 0),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ds = generate(&spec)?;
    ensure_dir(out)?;
    for (stem, m) in [
        ("x_train", &ds.x_train),
        ("y_train", &ds.y_train),
        ("x_val", &ds.x_val),
        ("y_val", &ds.y_val),
        ("x_test", &ds.x_test),
        ("y_test", &ds.y_test),
    ] {
        save_matrix_with_csv(m, out, stem)?;
    }
    write_sorted_json(&spec, out.join("synthetic_spec.json"))?;
    Ok(())
}

pub fn train(config: &Path, out: &Path, seed: Option<u64>, repeat: usize) -> Result<()> {
    let cfg = load_config(config)?;
    let raw = load_raw(&cfg)?;
    let sketches = sketch_pair(&cfg, seed);
    let sel = select(&cfg, &raw, cfg.variant, &sketches)?;
    let ridge = RidgeConfig {
        lambda: sel.lambda,
        solve: cfg.solve,
    };
    let (model, fit_seconds) =
        timed_median(repeat, || fit_with(cfg.variant, &sel.problem, &sketches, &ridge).map_err(to_core))?;
    ensure_dir(out)?;
    save_model(&model, Some(sel.problem.input_kernel), Some(cfg.output_kernel), out)?;
    save_matrix_with_csv(model.core(), out, MODEL_CORE.trim_end_matches(".skmx"))?;
    let report = json!({
        "command": "train",
        "variant": cfg.variant,
        "lambda": sel.lambda,
        "input_kernel": sel.problem.input_kernel,
        "output_kernel": cfg.output_kernel,
        "n_train": sel.problem.n_train(),
        "m_x": model.input_sketch().map(|r| r.m()),
        "m_y": model.output_sketch().map(|r| r.m()),
        "fit_seconds": fit_seconds,
        "repeat": repeat,
        "selection_metric": sel.metric.key(),
        "selection": sel.table,
    });
    write_sorted_json(&report, out.join("train_report.json"))?;
    Ok(())
}

// `timed_median` wants the library error type
fn to_core(e: anyhow::Error) -> sketched_okr::Error {
    match e.downcast::<sketched_okr::Error>() {
        Ok(core) => core,
        Err(other) => sketched_okr::Error::InvalidParameter(other.to_string()),
    }
}

pub fn eval(config: &Path, model_dir: &Path, split: SplitName, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let raw = load_raw(&cfg)?;
    let (model, manifest) = load_model(model_dir)?;
    let kernel = manifest.input_kernel.unwrap_or(cfg.input_kernel);
    let problem = raw.problem(&cfg, kernel)?;
    let data = problem.split(split)?;
    let metrics = default_metrics(&cfg, &raw);
    let e = evaluate(&model, &problem, &data, &metrics)?;
    ensure_dir(out)?;
    if let Some(pred) = &e.outputs {
        save_matrix_with_csv(pred, out, "predictions")?;
    }
    if let Some(decoded) = &e.decoded {
        let mut text = String::from("example,index,score,topk\n");
        for (i, p) in decoded.iter().enumerate() {
            let topk: Vec<String> = p.topk.iter().map(|j| j.to_string()).collect();
            text.push_str(&format!("{i},{},{:e},{}\n", p.index, p.score, topk.join(" ")));
        }
        fs::write(out.join("decoded.csv"), text)?;
    }
    let mut report = Map::new();
    report.insert("command".into(), json!("eval"));
    report.insert("variant".into(), json!(model.variant()));
    report.insert("split".into(), json!(format!("{split:?}").to_lowercase()));
    report.insert("lambda".into(), json!(model.lambda()));
    report.insert("n_train".into(), json!(model.n_train()));
    report.insert("n_eval".into(), json!(data.k_cross.nrows()));
    report.insert("inference_seconds".into(), json!(e.inference_seconds));
    insert_metrics(&mut report, &e.metrics);
    write_sorted_json(&Value::Object(report), out.join("report.json"))?;
    Ok(())
}

pub fn benchmark(config: &Path, out: &Path, seed: Option<u64>, repeat: Option<usize>) -> Result<()> {
    let cfg = load_config(config)?;
    let b = cfg.benchmark.clone().context("config has no `benchmark` section")?;
    let repeat = repeat.unwrap_or(b.repeat);
    let raw = load_raw(&cfg)?;
    // hyperparameters are chosen once, on the exact estimator
    let sel = select(&cfg, &raw, Variant::Iokr, &sketch_pair(&cfg, seed))?;
    let problem = &sel.problem;
    let cands = problem
        .candidates
        .as_ref()
        .context("benchmark times decoding and needs a candidate set")?;
    let set = match b.n_candidates {
        Some(c) if c < cands.set.len() => CandidateSet::unlabeled(
            cands.set.cross_gram.columns(0, c).into_owned(),
            cands.set.diag.rows(0, c).into_owned(),
        )?,
        _ => cands.set.clone(),
    };
    let outputs = match (&problem.y_train, &problem.test.outputs, cfg.output_kernel) {
        (Some(y), Some(t), KernelSpec::Linear) => Some((y, t)),
        _ => None,
    };
    let bench = BenchProblem {
        k_x: &problem.k_x,
        k_y: &problem.k_y,
        k_test_train: &problem.test.k_cross,
        candidates: &set,
        outputs,
        truth: problem.test.truth.as_deref(),
    };
    let metric = cfg.metrics.first().copied();
    let seeds: Vec<u64> = match (seed, cfg.seeds.is_empty()) {
        (Some(s), _) => vec![s],
        (None, true) => vec![0],
        (None, false) => cfg.seeds.clone(),
    };
    let ridge = RidgeConfig {
        lambda: sel.lambda,
        solve: cfg.solve,
    };
    let mut rows = Vec::new();
    for &s in &seeds {
        let mut cells = Vec::new();
        if b.include_iokr {
            cells.push((Variant::Iokr, 0, 0));
        }
        for &m_x in &b.m_x {
            for &m_y in &b.m_y {
                cells.push((cfg.variant, m_x, m_y));
            }
        }
        for (variant, m_x, m_y) in cells {
            let cell = BenchCell {
                variant,
                m_x,
                m_y,
                sketch: b.sketch,
                p: b.p,
                seed: s,
            };
            let (mut row, model) = run_bench_cell(&bench, &cell, &ridge, repeat)?;
            if let Some(m) = metric {
                row.metric = evaluate(&model, problem, &problem.test, &[m])?.metrics[m.key()];
            }
            rows.push(row);
        }
    }
    ensure_dir(out)?;
    fs::write(out.join("benchmark.csv"), bench_csv(&rows))?;
    let report = json!({
        "command": "benchmark",
        "lambda": sel.lambda,
        "input_kernel": problem.input_kernel,
        "metric": metric.map(|m| m.key()).unwrap_or(if outputs.is_some() { "mse" } else { "top1" }),
        "repeat": repeat,
        "seeds": seeds,
        "rows": rows.len(),
        "selection": sel.table,
    });
    write_sorted_json(&report, out.join("benchmark.json"))?;
    Ok(())
}

pub fn sketch_diag(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config)?;
    let d = cfg.diagnostics.clone().context("config has no `diagnostics` section")?;
    let raw = load_raw(&cfg)?;
    let (k, k_eval, diag) = diag_inputs(&cfg, &raw, d.side, d.eval)?;
    let specs: Vec<SketchSpec> = d
        .specs
        .iter()
        .map(|s| seed.map_or(*s, |v| s.with_seed(v)))
        .collect();
    let rows = sketch_size_sweep(&k, &k_eval, &diag, &specs, d.seeds_per_point)?;
    ensure_dir(out)?;
    fs::write(out.join("sketch_diag.csv"), sweep_csv(&rows))?;
    let eff: Vec<Value> = d
        .eff_dim_t
        .iter()
        .map(|&t| Ok(json!({ "t": t, "eff_dim": effective_dimension(&k, t)? })))
        .collect::<Result<_>>()?;
    let report = json!({
        "command": "sketch-diag",
        "side": d.side,
        "eval": d.eval,
        "n_train": k.nrows(),
        "n_eval": k_eval.nrows(),
        "seeds_per_point": d.seeds_per_point,
        "effective_dimension": eff,
        "rows": rows,
    });
    write_sorted_json(&report, out.join("sketch_diag.json"))?;
    Ok(())
}

/// Training Gram, evaluation cross-Gram and evaluation self-kernel values
/// for one side of the problem.
fn diag_inputs(
    cfg: &RunConfig,
    raw: &RawData,
    side: KernelSide,
    eval: EvalSample,
) -> Result<(GramMatrix, DMatrix<f64>, DVector<f64>)> {
    match raw {
        RawData::Features {
            x_train,
            y_train,
            val,
            x_test,
            y_test,
        } => {
            let (spec, train, held) = match side {
                KernelSide::Input => (
                    cfg.input_kernel,
                    x_train,
                    val.as_ref().map(|v| &v.0).unwrap_or(x_test),
                ),
                KernelSide::Output => (
                    cfg.output_kernel,
                    y_train,
                    val.as_ref().map(|v| &v.1).unwrap_or(y_test),
                ),
            };
            let k = gram(&spec, train, train)?;
            Ok(match eval {
                EvalSample::Train => {
                    let diag = k.diag().cloned().unwrap();
                    let vals = k.values().clone();
                    (k, vals, diag)
                }
                EvalSample::Heldout => {
                    let cross = gram(&spec, held, train)?.into_values();
                    (k, cross, kernel_diag(&spec, held)?)
                }
            })
        }
        RawData::Precomputed {
            k_train,
            ky_train,
            k_val,
            k_test,
            ..
        } => {
            let (k, normalized) = match side {
                KernelSide::Input => (k_train.clone(), cfg.input_kernel.is_normalized()),
                KernelSide::Output => (ky_train.clone(), cfg.output_kernel.is_normalized()),
            };
            match (eval, side) {
                (EvalSample::Train, _) => {
                    let diag = k.diag().cloned().context("training Gram must be square")?;
                    let vals = k.values().clone();
                    Ok((k, vals, diag))
                }
                (EvalSample::Heldout, KernelSide::Input) if normalized => {
                    let cross = k_val.clone().unwrap_or_else(|| k_test.clone());
                    let diag = DVector::from_element(cross.nrows(), 1.0);
                    Ok((k, cross, diag))
                }
                _ => bail!(
                    "held-out diagnostics on precomputed Grams need the input side and a normalized kernel; use `\"eval\": \"train\"`"
                ),
            }
        }
    }
}
