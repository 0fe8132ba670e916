//! Pre-image step over a finite candidate set.
//!
//! For a test input `x` the decoded output minimizes
//! `k_y(y, y) - 2 alpha(x)^T kappa_Y^y` over the candidates, which equals
//! `|h(x) - psi(y)|^2` up to the candidate-independent term `|h(x)|^2`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{gram, kernel_diag, KernelSpec};
use crate::regression::FittedModel;

/// Candidate outputs seen through the output kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    /// `K^y_{tr,c}`, one row per training output.
    pub cross_gram: DMatrix<f64>,
    /// `k_y(y_c, y_c)` per candidate.
    pub diag: DVector<f64>,
    pub labels: Vec<String>,
}

impl CandidateSet {
    pub fn new(cross_gram: DMatrix<f64>, diag: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        check_dim("candidate diag length", cross_gram.ncols(), diag.len())?;
        check_dim("candidate label count", cross_gram.ncols(), labels.len())?;
        if cross_gram.ncols() == 0 {
            return Err(Error::EmptyInput("candidate set"));
        }
        if diag.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(
                "candidate diagonal entries must be finite and nonnegative".into(),
            ));
        }
        if cross_gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("candidate cross-gram"));
        }
        Ok(CandidateSet {
            cross_gram,
            diag,
            labels,
        })
    }

    /// Candidates with default labels `"0", "1", ...`.
    pub fn unlabeled(cross_gram: DMatrix<f64>, diag: DVector<f64>) -> Result<Self> {
        let labels = (0..cross_gram.ncols()).map(|j| j.to_string()).collect();
        CandidateSet::new(cross_gram, diag, labels)
    }

    /// Builds the set by evaluating `spec` between training outputs and
    /// candidate outputs (rows are samples).
    pub fn from_features(
        spec: &KernelSpec,
        train_outputs: &DMatrix<f64>,
        candidates: &DMatrix<f64>,
    ) -> Result<Self> {
        let cross = gram(spec, train_outputs, candidates)?.into_values();
        let diag = kernel_diag(spec, candidates)?;
        CandidateSet::unlabeled(cross, diag)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub index: usize,
    /// `diag[index] - 2 S[t][index]`
    pub score: f64,
    /// The `k` best candidates, best first; `topk[0] == index`.
    pub topk: Vec<usize>,
}

/// `S = K_test_train * chain * K^y_{tr,c}`, `n_te x n_c`.
pub fn score_matrix(
    model: &FittedModel,
    k_test_train: &DMatrix<f64>,
    cand: &CandidateSet,
) -> Result<DMatrix<f64>> {
    check_dim("candidate cross-gram rows", model.n_train(), cand.cross_gram.nrows())?;
    model.apply_chain(k_test_train, &cand.cross_gram)
}

/// Ranks candidates per row of a score matrix. Ties go to the smaller index.
pub fn decode_scores(scores: &DMatrix<f64>, diag: &DVector<f64>, k: usize) -> Result<Vec<Prediction>> {
    let n_c = diag.len();
    if n_c == 0 {
        return Err(Error::EmptyInput("candidate set"));
    }
    check_dim("score columns", n_c, scores.ncols())?;
    if k == 0 || k > n_c {
        return Err(Error::InvalidParameter(format!(
            "top-k must satisfy 1 <= k <= {n_c}, got {k}"
        )));
    }
    if k == 1 {
        return Ok(argmin_scan(scores, diag));
    }
    let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    };
    // one contiguous column per test row
    let by_row = scores.transpose();
    let mut out = Vec::with_capacity(scores.nrows());
    let mut objective: Vec<(f64, usize)> = Vec::with_capacity(n_c);
    for t in 0..scores.nrows() {
        let row = by_row.column(t);
        objective.clear();
        objective.extend((0..n_c).map(|j| (diag[j] - 2.0 * row[j], j)));
        if k < n_c {
            objective.select_nth_unstable_by(k - 1, order);
        }
        let best = &mut objective[..k];
        best.sort_unstable_by(order);
        out.push(Prediction {
            index: best[0].1,
            score: best[0].0,
            topk: best.iter().map(|&(_, j)| j).collect(),
        });
    }
    Ok(out)
}

/// Top-1 decoding, sweeping the column-major score matrix column by column.
fn argmin_scan(scores: &DMatrix<f64>, diag: &DVector<f64>) -> Vec<Prediction> {
    let n_te = scores.nrows();
    let mut best = vec![(f64::INFINITY, usize::MAX); n_te];
    for (j, col) in scores.column_iter().enumerate() {
        let d = diag[j];
        for (slot, &s) in best.iter_mut().zip(col.iter()) {
            let o = d - 2.0 * s;
            // strict comparison keeps the smaller index on ties
            if o.total_cmp(&slot.0) == Ordering::Less || slot.1 == usize::MAX {
                *slot = (o, j);
            }
        }
    }
    best.into_iter()
        .map(|(score, index)| Prediction {
            index,
            score,
            topk: vec![index],
        })
        .collect()
}

pub fn decode(
    model: &FittedModel,
    k_test_train: &DMatrix<f64>,
    cand: &CandidateSet,
    k: usize,
) -> Result<Vec<Prediction>> {
    if cand.is_empty() {
        return Err(Error::EmptyInput("candidate set"));
    }
    let scores = score_matrix(model, k_test_train, cand)?;
    decode_scores(&scores, &cand.diag, k)
}
