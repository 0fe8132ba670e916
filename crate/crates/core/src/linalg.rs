//! Regularized symmetric solves and eigendecomposition pseudo-inverses.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub const DEFAULT_PINV_RTOL: f64 = 1e-10;

fn default_rtol() -> f64 {
    DEFAULT_PINV_RTOL
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    /// Eigenvalues with `|l| <= pinv_rtol * max |l|` are treated as zero.
    #[serde(default = "default_rtol")]
    pub pinv_rtol: f64,
    /// Diagonal boost for the Cholesky retry; `None` means `1e-12 * trace / n`.
    #[serde(default)]
    pub jitter: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            pinv_rtol: DEFAULT_PINV_RTOL,
            jitter: None,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.pinv_rtol > 0.0 && self.pinv_rtol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pinv_rtol must lie in (0, 1), got {}",
                self.pinv_rtol
            )));
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "jitter must be nonnegative, got {j}"
                )));
            }
        }
        Ok(())
    }
}

fn check_finite(context: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Solves `(A + shift I) X = B` by Cholesky, retrying once with a jitter.
pub fn reg_solve(
    a: &DMatrix<f64>,
    shift: f64,
    b: &DMatrix<f64>,
    opts: &SolveOptions,
) -> Result<DMatrix<f64>> {
    check_dim("reg_solve square", a.nrows(), a.ncols())?;
    check_dim("reg_solve rhs rows", a.nrows(), b.nrows())?;
    if !(shift > 0.0 && shift.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularization shift must be positive, got {shift}"
        )));
    }
    check_finite("reg_solve matrix", a)?;
    check_finite("reg_solve rhs", b)?;
    let q = a.nrows();
    let mut shifted = a.clone();
    for i in 0..q {
        shifted[(i, i)] += shift;
    }
    if let Some(chol) = shifted.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    let jitter = opts
        .jitter
        .unwrap_or_else(|| 1e-12 * shifted.trace().abs() / q.max(1) as f64);
    let mut boosted = shifted.clone();
    for i in 0..q {
        boosted[(i, i)] += jitter;
    }
    match boosted.cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => Err(Error::Factorization {
            condition: condition_estimate(&shifted),
        }),
    }
}

/// Ratio of extreme absolute eigenvalues of a symmetric matrix.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let abs = eig.eigenvalues.map(f64::abs);
    abs.max() / abs.min()
}

/// Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.
pub fn sym_pinv(a: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    check_dim("sym_pinv square", a.nrows(), a.ncols())?;
    check_finite("sym_pinv matrix", a)?;
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    let eig = SymmetricEigen::new(a.clone());
    let cutoff = rtol * eig.eigenvalues.amax();
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= inv[j];
    }
    let p = scaled * v.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

/// Eigenvalues of a symmetric matrix, in no particular order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_dim("sym_eigenvalues square", a.nrows(), a.ncols())?;
    check_finite("sym_eigenvalues matrix", a)?;
    Ok(SymmetricEigen::new(a.clone()).eigenvalues)
}
