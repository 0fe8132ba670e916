//! Random sketch matrices `R` (m x n) and the products the estimators need.
//!
//! Four families are supported:
//!
//! * `subsample`: rows of the identity drawn without replacement (Nyström anchors),
//!   stored as an index list.
//! * `gaussian`: i.i.d. `N(0, 1/m)` entries, stored dense.
//! * `p_sr` / `p_sg`: p-sparsified entries `b * s / sqrt(m p)` with
//!   `b ~ Bernoulli(p)` and `s` Rademacher or standard normal, stored in
//!   compressed-row form. Both are sub-Gaussian with `nu^2 = 1/p`.
//!
//! Drawing is a pure function of `(spec, n)`. The generator is ChaCha8 seeded
//! with `spec.seed`; dense and sparse sketches are filled row-major, and every
//! p-sparsified entry consumes exactly one uniform draw followed by one sign
//! (or normal) draw, whether or not it is kept.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    Subsample,
    Gaussian,
    PSr,
    PSg,
}

impl SketchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SketchKind::Subsample => "subsample",
            SketchKind::Gaussian => "gaussian",
            SketchKind::PSr => "p_sr",
            SketchKind::PSg => "p_sg",
        }
    }
}

fn default_p() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub m: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(kind: SketchKind, m: usize, seed: u64) -> Self {
        SketchSpec {
            kind,
            m,
            p: 1.0,
            seed,
        }
    }

    pub fn sparsified(kind: SketchKind, m: usize, p: f64, seed: u64) -> Self {
        SketchSpec { kind, m, p, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SketchSpec { seed, ..self }
    }

    /// Sub-Gaussian parameter `nu^2` of the entry distribution (1 for
    /// Gaussian, `1/p` for p-sparsified). Not defined for sub-sampling.
    pub fn nu_squared(&self) -> Option<f64> {
        match self.kind {
            SketchKind::Subsample => None,
            SketchKind::Gaussian => Some(1.0),
            SketchKind::PSr | SketchKind::PSg => Some(1.0 / self.p),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptyInput("sketch column count"));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("sketch size m must be >= 1".into()));
        }
        match self.kind {
            SketchKind::Subsample if self.m > n => Err(Error::InvalidParameter(format!(
                "subsample sketch size {} exceeds n = {}",
                self.m, n
            ))),
            SketchKind::PSr | SketchKind::PSg if !(self.p > 0.0 && self.p <= 1.0) => Err(
                Error::InvalidParameter(format!("sparsity p must lie in (0, 1], got {}", self.p)),
            ),
            _ => Ok(()),
        }
    }
}

/// Compressed-row sparse matrix, only what sketch application needs.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &(i, j, v) in &triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidParameter(format!(
                    "sparse entry ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Subsample(Vec<usize>),
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

/// An `m x n` sketch matrix in its natural storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchOperator {
    repr: Repr,
    n: usize,
    spec: Option<SketchSpec>,
}

/// Serializable description of an operator: drawn operators by their spec,
/// sub-sampling by index list, anything else by explicit entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case", deny_unknown_fields)]
pub enum SketchRecord {
    Indices {
        n: usize,
        indices: Vec<usize>,
    },
    Drawn {
        n: usize,
        spec: SketchSpec,
    },
    Dense {
        rows: usize,
        cols: usize,
        row_major: Vec<f64>,
    },
    Sparse {
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
}

pub fn draw(spec: &SketchSpec, n: usize) -> Result<SketchOperator> {
    spec.validate(n)?;
    let m = spec.m;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let repr = match spec.kind {
        SketchKind::Subsample => {
            // partial Fisher-Yates
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..m {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            pool.truncate(m);
            Repr::Subsample(pool)
        }
        SketchKind::Gaussian => {
            let scale = 1.0 / (m as f64).sqrt();
            let mut data = Vec::with_capacity(m * n);
            for _ in 0..m * n {
                let z: f64 = rng.sample(StandardNormal);
                data.push(z * scale);
            }
            Repr::Dense(DMatrix::from_row_slice(m, n, &data))
        }
        SketchKind::PSr | SketchKind::PSg => {
            let scale = 1.0 / (m as f64 * spec.p).sqrt();
            let mut triplets = Vec::new();
            for i in 0..m {
                for j in 0..n {
                    let u: f64 = rng.random();
                    let s = if spec.kind == SketchKind::PSr {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        rng.sample::<f64, _>(StandardNormal)
                    };
                    if u < spec.p {
                        triplets.push((i, j, s * scale));
                    }
                }
            }
            Repr::Sparse(CsrMatrix::from_triplets(m, n, triplets)?)
        }
    };
    Ok(SketchOperator {
        repr,
        n,
        spec: Some(*spec),
    })
}

impl SketchOperator {
    /// The identity sketch `I_n`.
    pub fn identity(n: usize) -> Self {
        SketchOperator {
            repr: Repr::Subsample((0..n).collect()),
            n,
            spec: None,
        }
    }

    /// Rows `e_{indices[0]}, e_{indices[1]}, ...` of `I_n`; indices must be distinct.
    pub fn from_indices(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput("subsample indices"));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "subsample index {i} out of range or repeated (n = {n})"
                )));
            }
            seen[i] = true;
        }
        Ok(SketchOperator {
            repr: Repr::Subsample(indices),
            n,
            spec: None,
        })
    }

    pub fn from_dense(r: DMatrix<f64>) -> Result<Self> {
        if r.nrows() == 0 || r.ncols() == 0 {
            return Err(Error::EmptyInput("dense sketch"));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense sketch"));
        }
        let n = r.ncols();
        Ok(SketchOperator {
            repr: Repr::Dense(r),
            n,
            spec: None,
        })
    }

    pub fn from_sparse(r: CsrMatrix) -> Result<Self> {
        if r.nrows == 0 || r.ncols == 0 {
            return Err(Error::EmptyInput("sparse sketch"));
        }
        let n = r.ncols;
        Ok(SketchOperator {
            repr: Repr::Sparse(r),
            n,
            spec: None,
        })
    }

    pub fn m(&self) -> usize {
        match &self.repr {
            Repr::Subsample(idx) => idx.len(),
            Repr::Dense(r) => r.nrows(),
            Repr::Sparse(r) => r.nrows,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> Option<&SketchSpec> {
        self.spec.as_ref()
    }

    /// Sampled indices for sub-sampling sketches.
    pub fn indices(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Subsample(idx) => Some(idx),
            _ => None,
        }
    }

    pub fn sparse(&self) -> Option<&CsrMatrix> {
        match &self.repr {
            Repr::Sparse(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Subsample(idx) => {
                let mut d = DMatrix::zeros(idx.len(), self.n);
                for (i, &j) in idx.iter().enumerate() {
                    d[(i, j)] = 1.0;
                }
                d
            }
            Repr::Dense(r) => r.clone(),
            Repr::Sparse(r) => r.to_dense(),
        }
    }

    /// `c * R`. Sub-sampling sketches become dense.
    pub fn scaled(&self, c: f64) -> SketchOperator {
        let repr = match &self.repr {
            Repr::Subsample(_) => Repr::Dense(self.to_dense() * c),
            Repr::Dense(r) => Repr::Dense(r * c),
            Repr::Sparse(r) => {
                let mut r = r.clone();
                r.values.iter_mut().for_each(|v| *v *= c);
                Repr::Sparse(r)
            }
        };
        SketchOperator {
            repr,
            n: self.n,
            spec: None,
        }
    }

    /// `R M` for an `n x q` matrix.
    pub fn apply_left(&self, mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("sketch apply_left rows", self.n, mat.nrows())?;
        let q = mat.ncols();
        Ok(match &self.repr {
            Repr::Subsample(idx) => mat.select_rows(idx.iter()),
            Repr::Dense(r) => r * mat,
            Repr::Sparse(r) => {
                let mut out = DMatrix::zeros(r.nrows, q);
                for c in 0..q {
                    let col = mat.column(c);
                    for i in 0..r.nrows {
                        out[(i, c)] = r.row(i).map(|(j, v)| v * col[j]).sum();
                    }
                }
                out
            }
        })
    }

    /// `M R^T` for a `q x n` matrix.
    pub fn apply_right_transpose(&self, mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("sketch apply_right_transpose cols", self.n, mat.ncols())?;
        Ok(match &self.repr {
            Repr::Subsample(idx) => mat.select_columns(idx.iter()),
            Repr::Dense(r) => mat * r.transpose(),
            Repr::Sparse(r) => {
                let mut out = DMatrix::zeros(mat.nrows(), r.nrows);
                for i in 0..r.nrows {
                    let mut dst = out.column_mut(i);
                    for (j, v) in r.row(i) {
                        dst.axpy(v, &mat.column(j), 1.0);
                    }
                }
                out
            }
        })
    }

    /// `R^T M` for an `m x q` matrix.
    pub fn apply_transpose_left(&self, mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("sketch apply_transpose_left rows", self.m(), mat.nrows())?;
        let q = mat.ncols();
        Ok(match &self.repr {
            Repr::Subsample(idx) => {
                let mut out = DMatrix::zeros(self.n, q);
                for (i, &j) in idx.iter().enumerate() {
                    out.row_mut(j).copy_from(&mat.row(i));
                }
                out
            }
            Repr::Dense(r) => r.transpose() * mat,
            Repr::Sparse(r) => {
                let mut out = DMatrix::zeros(self.n, q);
                for c in 0..q {
                    for i in 0..r.nrows {
                        let x = mat[(i, c)];
                        for (j, v) in r.row(i) {
                            out[(j, c)] += v * x;
                        }
                    }
                }
                out
            }
        })
    }

    /// `R K R^T`, symmetrized. For sub-sampling this is the principal
    /// submatrix at the sampled indices.
    pub fn sketch_gram(&self, k: &GramMatrix) -> Result<DMatrix<f64>> {
        let n = k.square_dim()?;
        check_dim("sketch_gram", self.n, n)?;
        let out = match &self.repr {
            Repr::Subsample(idx) => {
                let kv = k.values();
                DMatrix::from_fn(idx.len(), idx.len(), |a, b| kv[(idx[a], idx[b])])
            }
            _ => {
                let rk = self.apply_left(k.values())?;
                self.apply_right_transpose(&rk)?
            }
        };
        Ok(symmetrize(out))
    }

    pub fn record(&self) -> SketchRecord {
        match (&self.repr, &self.spec) {
            (Repr::Subsample(idx), _) => SketchRecord::Indices {
                n: self.n,
                indices: idx.clone(),
            },
            (_, Some(spec)) => SketchRecord::Drawn {
                n: self.n,
                spec: *spec,
            },
            (Repr::Dense(r), None) => SketchRecord::Dense {
                rows: r.nrows(),
                cols: r.ncols(),
                row_major: r.transpose().as_slice().to_vec(),
            },
            (Repr::Sparse(r), None) => SketchRecord::Sparse {
                rows: r.nrows,
                cols: r.ncols,
                triplets: r.triplets(),
            },
        }
    }

    pub fn from_record(record: &SketchRecord) -> Result<SketchOperator> {
        match record {
            SketchRecord::Indices { n, indices } => {
                SketchOperator::from_indices(*n, indices.clone())
            }
            SketchRecord::Drawn { n, spec } => draw(spec, *n),
            SketchRecord::Dense {
                rows,
                cols,
                row_major,
            } => {
                check_dim("dense sketch record", rows * cols, row_major.len())?;
                SketchOperator::from_dense(DMatrix::from_row_slice(*rows, *cols, row_major))
            }
            SketchRecord::Sparse {
                rows,
                cols,
                triplets,
            } => SketchOperator::from_sparse(CsrMatrix::from_triplets(
                *rows,
                *cols,
                triplets.clone(),
            )?),
        }
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}
