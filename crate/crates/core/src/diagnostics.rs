//! Empirical sketch-quality quantities: the squared residual of feature maps
//! after projection onto the sketched subspace, and the effective dimension
//! of a Gram spectrum.
//!
//! With `K~ = R K R^T` the projector onto `span{sum_j R_ij chi(z_j)}` gives,
//! for an evaluation point with training cross-kernel row `kappa` and
//! self-kernel `k(z, z)`,
//!
//! ```text
//! |(I - P) chi(z)|^2 = k(z, z) - (R kappa)^T pinv(K~) (R kappa)
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg::{sym_eigenvalues, sym_pinv, DEFAULT_PINV_RTOL};
use crate::sketch::{draw, SketchKind, SketchOperator, SketchSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SketchDiagnostics {
    /// Mean of `per_point`, clamped to `[0, inf)`.
    pub recon_error_sq: f64,
    /// Raw residuals before clamping.
    pub per_point: Option<DVector<f64>>,
    pub eff_dim: Option<f64>,
}

pub fn reconstruction_error(
    r: &SketchOperator,
    k_train: &GramMatrix,
    k_eval_train: &DMatrix<f64>,
    diag_eval: &DVector<f64>,
) -> Result<SketchDiagnostics> {
    reconstruction_error_with(r, k_train, k_eval_train, diag_eval, DEFAULT_PINV_RTOL)
}

pub fn reconstruction_error_with(
    r: &SketchOperator,
    k_train: &GramMatrix,
    k_eval_train: &DMatrix<f64>,
    diag_eval: &DVector<f64>,
    rtol: f64,
) -> Result<SketchDiagnostics> {
    let n = k_train.square_dim()?;
    check_dim("sketch columns", n, r.n())?;
    check_dim("eval cross-gram columns", n, k_eval_train.ncols())?;
    check_dim("eval diag length", k_eval_train.nrows(), diag_eval.len())?;
    if diag_eval.is_empty() {
        return Err(Error::EmptyInput("evaluation points"));
    }
    let k_tilde = r.sketch_gram(k_train)?;
    let pinv = sym_pinv(&k_tilde, rtol)?;
    let z = r.apply_right_transpose(k_eval_train)?;
    let zp = &z * pinv;
    let per_point = DVector::from_fn(z.nrows(), |i, _| {
        diag_eval[i] - zp.row(i).dot(&z.row(i))
    });
    let mean = per_point.mean();
    Ok(SketchDiagnostics {
        recon_error_sq: mean.max(0.0),
        per_point: Some(per_point),
        eff_dim: None,
    })
}

/// `sum_i s_i / (s_i + n t)` over the eigenvalues of `K`, i.e.
/// `Tr(K (K + n t I)^{-1})`. Eigenvalues below the decomposition's
/// round-off floor `n * eps * max|s|` count as zero; otherwise a tiny `t`
/// would count noise eigenvalues of a rank-deficient `K`.
pub fn effective_dimension(k: &GramMatrix, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "effective dimension needs t > 0, got {t}"
        )));
    }
    let n = k.square_dim()?;
    let shift = n as f64 * t;
    let eig = sym_eigenvalues(k.values())?;
    let floor = n as f64 * f64::EPSILON * eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(eig
        .iter()
        .filter(|&&s| s > floor)
        .map(|&s| s / (s + shift))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: SketchKind,
    pub m: usize,
    pub p: f64,
    pub seed_count: usize,
    pub mean_err: f64,
    pub stderr: f64,
}

pub const SWEEP_CSV_HEADER: &str = "kind,m,p,seed_count,mean_err,stderr";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e}",
            self.kind.as_str(),
            self.m,
            self.p,
            self.seed_count,
            self.mean_err,
            self.stderr
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Mean reconstruction error per spec over seeds `spec.seed, spec.seed + 1, ...`.
/// Rows come back sorted by `m` (stable for equal sizes).
pub fn sketch_size_sweep(
    k_train: &GramMatrix,
    k_eval_train: &DMatrix<f64>,
    diag_eval: &DVector<f64>,
    specs: &[SketchSpec],
    seeds_per_point: usize,
) -> Result<Vec<SweepRow>> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("sketch spec list"));
    }
    if seeds_per_point == 0 {
        return Err(Error::InvalidParameter("seeds_per_point must be >= 1".into()));
    }
    let n = k_train.square_dim()?;
    let cells: Vec<(usize, u64)> = (0..specs.len())
        .flat_map(|s| (0..seeds_per_point as u64).map(move |k| (s, k)))
        .collect();
    let errors = cells
        .par_iter()
        .map(|&(s, k)| {
            let spec = specs[s].with_seed(specs[s].seed.wrapping_add(k));
            let r = draw(&spec, n)?;
            Ok(reconstruction_error(&r, k_train, k_eval_train, diag_eval)?.recon_error_sq)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rows: Vec<SweepRow> = specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let cell = &errors[s * seeds_per_point..(s + 1) * seeds_per_point];
            let (mean_err, stderr) = mean_and_stderr(cell);
            SweepRow {
                kind: spec.kind,
                m: spec.m,
                p: spec.p,
                seed_count: seeds_per_point,
                mean_err,
                stderr,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.m);
    Ok(rows)
}

/// Errors for nested Nyström anchor sets: one random ordering of the
/// training indices, evaluated at each prefix length in `sizes`.
pub fn nested_subsample_errors(
    k_train: &GramMatrix,
    k_eval_train: &DMatrix<f64>,
    diag_eval: &DVector<f64>,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let n = k_train.square_dim()?;
    let largest = sizes.iter().copied().max().ok_or(Error::EmptyInput("anchor sizes"))?;
    let full = draw(&SketchSpec::new(SketchKind::Subsample, largest, seed), n)?;
    let order = full.indices().unwrap_or_default();
    sizes
        .iter()
        .map(|&m| {
            let r = SketchOperator::from_indices(n, order[..m].to_vec())?;
            Ok(reconstruction_error(&r, k_train, k_eval_train, diag_eval)?.recon_error_sq)
        })
        .collect()
}
