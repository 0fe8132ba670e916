//! Timing and sweep machinery shared by the CLI and the acceptance suite.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decode::{decode_scores, score_matrix, CandidateSet};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg::{reg_solve, SolveOptions};
use crate::metrics::topk_accuracy;
use crate::regression::{fit, FittedModel, RidgeConfig, Variant};
use crate::sketch::{draw, SketchKind, SketchSpec};
use crate::synthetic::mse;

/// Runs `f` once as warm-up, then `repeat` timed runs on a monotonic clock.
/// Returns the last result and the median wall time in seconds.
pub fn timed_median<T>(repeat: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    if repeat == 0 {
        return Err(Error::InvalidParameter("repeat must be >= 1".into()));
    }
    let mut last = f()?;
    let mut times = Vec::with_capacity(repeat);
    for _ in 0..repeat {
        let start = Instant::now();
        last = f()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((last, median(&mut times)))
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Validation MSE of the exact estimator for the linear output kernel,
/// solving against the training outputs directly instead of forming the
/// inverse.
pub fn iokr_validation_mse(
    k_x: &GramMatrix,
    k_val_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    y_val: &DMatrix<f64>,
    lambda: f64,
    solve: &SolveOptions,
) -> Result<f64> {
    let n = k_x.square_dim()?;
    let weights = reg_solve(k_x.values(), n as f64 * lambda, y_train, solve)?;
    mse(&(k_val_train * weights), y_val)
}

/// Deterministic output-sketch seed paired with an input-sketch seed.
pub fn output_seed(seed: u64) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15)
}

/// What a benchmark cell is evaluated against.
pub struct BenchProblem<'a> {
    pub k_x: &'a GramMatrix,
    pub k_y: &'a GramMatrix,
    pub k_test_train: &'a DMatrix<f64>,
    pub candidates: &'a CandidateSet,
    /// Training and test outputs for the MSE metric (linear output kernel).
    pub outputs: Option<(&'a DMatrix<f64>, &'a DMatrix<f64>)>,
    /// True candidate ids for top-1 accuracy, used when `outputs` is absent.
    pub truth: Option<&'a [usize]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub variant: Variant,
    pub m_x: usize,
    pub m_y: usize,
    pub sketch: SketchKind,
    pub p: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub variant: Variant,
    pub m_x: usize,
    pub m_y: usize,
    pub seed: u64,
    pub fit_seconds: f64,
    pub inference_seconds: f64,
    pub metric: f64,
}

pub const BENCH_CSV_HEADER: &str = "variant,m_x,m_y,seed,fit_seconds,inference_seconds,metric";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e},{:e}\n",
            r.variant, r.m_x, r.m_y, r.seed, r.fit_seconds, r.inference_seconds, r.metric
        ));
    }
    out
}

/// Fits one cell (sketch draws included in the fit time), then times
/// inference as scoring plus top-1 decoding over the candidate set.
/// Unsketched sides report `m = n`.
pub fn run_bench_cell(
    problem: &BenchProblem<'_>,
    cell: &BenchCell,
    ridge: &RidgeConfig,
    repeat: usize,
) -> Result<(BenchRow, FittedModel)> {
    let n = problem.k_x.square_dim()?;
    let variant = cell.variant;
    let x_spec = SketchSpec::sparsified(cell.sketch, cell.m_x, cell.p, cell.seed);
    let y_spec = SketchSpec::sparsified(cell.sketch, cell.m_y, cell.p, output_seed(cell.seed));
    let (model, fit_seconds) = timed_median(repeat, || {
        let r_x = variant.sketches_input().then(|| draw(&x_spec, n)).transpose()?;
        let r_y = variant.sketches_output().then(|| draw(&y_spec, n)).transpose()?;
        fit(
            variant,
            problem.k_x,
            problem.k_y,
            r_x.as_ref(),
            r_y.as_ref(),
            ridge,
        )
    })?;
    let (preds, inference_seconds) = timed_median(repeat, || {
        let s = score_matrix(&model, problem.k_test_train, problem.candidates)?;
        decode_scores(&s, &problem.candidates.diag, 1)
    })?;
    let metric = match (problem.outputs, problem.truth) {
        (Some((y_train, y_test)), _) => {
            mse(&model.predict_outputs(problem.k_test_train, y_train)?, y_test)?
        }
        (None, Some(truth)) => {
            let ranked: Vec<Vec<usize>> = preds.iter().map(|p| p.topk.clone()).collect();
            topk_accuracy(&ranked, truth, 1)?
        }
        (None, None) => f64::NAN,
    };
    let row = BenchRow {
        variant,
        m_x: if variant.sketches_input() { cell.m_x } else { n },
        m_y: if variant.sketches_output() { cell.m_y } else { n },
        seed: cell.seed,
        fit_seconds,
        inference_seconds,
        metric,
    };
    Ok((row, model))
}
