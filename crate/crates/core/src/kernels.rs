//! Scalar kernels on feature vectors and the Gram matrices built from them.
//!
//! Feature sets are passed as matrices with one sample per row. Square Grams
//! built from a single sample set are exactly symmetric: the upper triangle is
//! evaluated once and mirrored.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Kernel family and its width parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `exp(-|a - b|^2 / (2 sigma2))`
    Gaussian { sigma2: f64 },
    /// `<a, b>`
    Linear,
    /// Gaussian kernel over the Tanimoto-induced distance `2 - 2 T(a, b)`.
    TanimotoGaussian { sigma2: f64 },
    /// Values supplied as a matrix file; no pointwise evaluation.
    Precomputed,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { sigma2 } | KernelSpec::TanimotoGaussian { sigma2 } => {
                if sigma2 > 0.0 && sigma2.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "kernel width sigma2 must be positive, got {sigma2}"
                    )))
                }
            }
            KernelSpec::Linear | KernelSpec::Precomputed => Ok(()),
        }
    }

    /// True when `k(z, z) = 1` for every `z`.
    pub fn is_normalized(&self) -> bool {
        matches!(
            self,
            KernelSpec::Gaussian { .. } | KernelSpec::TanimotoGaussian { .. }
        )
    }

    /// Returns a copy with the width replaced; kinds without a width are unchanged.
    pub fn with_width(&self, sigma2: f64) -> KernelSpec {
        match self {
            KernelSpec::Gaussian { .. } => KernelSpec::Gaussian { sigma2 },
            KernelSpec::TanimotoGaussian { .. } => KernelSpec::TanimotoGaussian { sigma2 },
            other => *other,
        }
    }
}

/// Tanimoto similarity `<a,b> / (|a|^2 + |b|^2 - <a,b>)`.
pub fn tanimoto(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("tanimoto", a.len(), b.len())?;
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let denom = aa + bb - ab;
    if denom == 0.0 {
        return Err(Error::UndefinedTanimoto);
    }
    Ok(ab / denom)
}

pub fn eval_kernel(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("kernel arguments", a.len(), b.len())?;
    match *spec {
        KernelSpec::Gaussian { sigma2 } => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            Ok((-d2 / (2.0 * sigma2)).exp())
        }
        KernelSpec::Linear => Ok(a.iter().zip(b).map(|(x, y)| x * y).sum()),
        KernelSpec::TanimotoGaussian { sigma2 } => {
            let t = tanimoto(a, b)?;
            Ok((-(2.0 - 2.0 * t) / (2.0 * sigma2)).exp())
        }
        KernelSpec::Precomputed => Err(Error::PrecomputedKernel),
    }
}

/// Kernel evaluations between two sample sets, `values[(i, j)] = k(a_i, b_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    symmetric: bool,
    diag: Option<DVector<f64>>,
}

impl GramMatrix {
    /// Wraps externally supplied kernel values. With `symmetric` set the
    /// matrix must be square and is replaced by `(M + M^T) / 2`.
    pub fn from_values(values: DMatrix<f64>, symmetric: bool) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        if symmetric {
            check_dim("symmetric gram", values.nrows(), values.ncols())?;
            let values = (&values + values.transpose()) * 0.5;
            let diag = values.diagonal();
            Ok(GramMatrix {
                values,
                symmetric,
                diag: Some(diag),
            })
        } else {
            let diag = (values.nrows() == values.ncols()).then(|| values.diagonal());
            Ok(GramMatrix {
                values,
                symmetric,
                diag,
            })
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn diag(&self) -> Option<&DVector<f64>> {
        self.diag.as_ref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Errors unless the matrix is square.
    pub fn square_dim(&self) -> Result<usize> {
        check_dim("square gram", self.nrows(), self.ncols())?;
        Ok(self.nrows())
    }
}

/// Samples as contiguous slices (one column per sample of the transposed matrix).
fn sample_columns(samples: &DMatrix<f64>) -> DMatrix<f64> {
    samples.transpose()
}

/// `gram(spec, A, B)` with rows of `a` and `b` as samples. Passing the same
/// matrix twice builds the symmetric Gram.
pub fn gram(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GramMatrix> {
    if std::ptr::eq(a, b) {
        return gram_symmetric(spec, a);
    }
    spec.validate()?;
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::EmptyInput("gram sample set"));
    }
    check_dim("gram feature dimension", a.ncols(), b.ncols())?;
    let at = sample_columns(a);
    let bt = sample_columns(b);
    let rows: Vec<Vec<f64>> = (0..a.nrows())
        .into_par_iter()
        .map(|i| {
            let ai = at.column(i);
            (0..b.nrows())
                .map(|j| eval_kernel(spec, ai.as_slice(), bt.column(j).as_slice()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| rows[i][j]);
    GramMatrix::from_values(values, false)
}

/// Symmetric Gram of one sample set; the upper triangle is mirrored.
pub fn gram_symmetric(spec: &KernelSpec, a: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    if a.nrows() == 0 {
        return Err(Error::EmptyInput("gram sample set"));
    }
    let n = a.nrows();
    let at = sample_columns(a);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ai = at.column(i);
            (i..n)
                .map(|j| eval_kernel(spec, ai.as_slice(), at.column(j).as_slice()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(n, n, |i, j| {
        if i <= j {
            rows[i][j - i]
        } else {
            rows[j][i - j]
        }
    });
    let diag = values.diagonal();
    Ok(GramMatrix {
        values,
        symmetric: true,
        diag: Some(diag),
    })
}

/// `k(z, z)` for every row of `a`.
pub fn kernel_diag(spec: &KernelSpec, a: &DMatrix<f64>) -> Result<DVector<f64>> {
    spec.validate()?;
    let at = sample_columns(a);
    let vals = (0..a.nrows())
        .map(|i| {
            let c = at.column(i);
            eval_kernel(spec, c.as_slice(), c.as_slice())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(vals))
}
