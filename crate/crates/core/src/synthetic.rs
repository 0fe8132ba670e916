//! Synthetic linear regression data with prescribed covariance spectra.
//!
//! `C = U diag(k^-c_decay) U^T`, `E = V diag(e_scale k^-e_decay) V^T` with
//! Haar-random `U`, `V`; `H = C H0` with standard normal `H0`; inputs
//! `x ~ N(0, C)` and outputs `y = H x + eps`, `eps ~ N(0, E)`.
//!
//! Draw order from a single ChaCha8 stream seeded with `seed`: `U`, `V`, `H0`
//! (each row-major), then train, validation and test splits, each drawing all
//! input Gaussians followed by all noise Gaussians, row-major.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

fn default_c_decay() -> f64 {
    1.5
}
fn default_e_scale() -> f64 {
    0.2
}
fn default_e_decay() -> f64 {
    0.1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub n_val: usize,
    pub n_te: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c_decay")]
    pub c_decay: f64,
    #[serde(default = "default_e_scale")]
    pub e_scale: f64,
    #[serde(default = "default_e_decay")]
    pub e_decay: f64,
}

impl SyntheticSpec {
    pub fn new(n: usize, n_val: usize, n_te: usize, d: usize, seed: u64) -> Self {
        SyntheticSpec {
            n,
            n_val,
            n_te,
            d,
            seed,
            c_decay: default_c_decay(),
            e_scale: default_e_scale(),
            e_decay: default_e_decay(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_val == 0 || self.n_te == 0 || self.d == 0 {
            return Err(Error::InvalidParameter(
                "synthetic sample counts and dimension must be >= 1".into(),
            ));
        }
        if !(self.c_decay > 0.0 && self.e_decay > 0.0 && self.e_scale > 0.0) {
            return Err(Error::InvalidParameter(
                "synthetic decays and noise scale must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `k^-c_decay`, `k = 1..d`.
    pub fn input_spectrum(&self) -> DVector<f64> {
        DVector::from_fn(self.d, |k, _| ((k + 1) as f64).powf(-self.c_decay))
    }

    /// `e_scale k^-e_decay`, `k = 1..d`.
    pub fn noise_spectrum(&self) -> DVector<f64> {
        DVector::from_fn(self.d, |k, _| self.e_scale * ((k + 1) as f64).powf(-self.e_decay))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub x_train: DMatrix<f64>,
    pub y_train: DMatrix<f64>,
    pub x_val: DMatrix<f64>,
    pub y_val: DMatrix<f64>,
    pub x_test: DMatrix<f64>,
    pub y_test: DMatrix<f64>,
    pub h_true: DMatrix<f64>,
    /// Input covariance `C`.
    pub input_cov: DMatrix<f64>,
    /// Noise covariance `E`.
    pub noise_cov: DMatrix<f64>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// columns of `Q` flipped so that `R` has a positive diagonal.
pub fn haar_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, d, d).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn covariance(basis: &DMatrix<f64>, spectrum: &DVector<f64>) -> DMatrix<f64> {
    let c = basis * DMatrix::from_diagonal(spectrum) * basis.transpose();
    (&c + c.transpose()) * 0.5
}

/// Rows `U diag(sqrt(s)) g_i` for standard normal `g_i`.
fn correlated_rows(g: DMatrix<f64>, basis: &DMatrix<f64>, spectrum: &DVector<f64>) -> DMatrix<f64> {
    let root = spectrum.map(f64::sqrt);
    let mut scaled = g;
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= root[j];
    }
    scaled * basis.transpose()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = haar_orthogonal(&mut rng, d);
    let v = haar_orthogonal(&mut rng, d);
    let h0 = gaussian_matrix(&mut rng, d, d);
    let cs = spec.input_spectrum();
    let es = spec.noise_spectrum();
    let input_cov = covariance(&u, &cs);
    let noise_cov = covariance(&v, &es);
    let h_true = &input_cov * h0;

    let mut split = |count: usize| {
        let g = gaussian_matrix(&mut rng, count, d);
        let e = gaussian_matrix(&mut rng, count, d);
        let x = correlated_rows(g, &u, &cs);
        let eps = correlated_rows(e, &v, &es);
        let y = &x * h_true.transpose() + eps;
        (x, y)
    };
    let (x_train, y_train) = split(spec.n);
    let (x_val, y_val) = split(spec.n_val);
    let (x_test, y_test) = split(spec.n_te);
    Ok(SyntheticDataset {
        x_train,
        y_train,
        x_val,
        y_val,
        x_test,
        y_test,
        h_true,
        input_cov,
        noise_cov,
    })
}

/// Mean over samples of `|pred_i - truth_i|^2 / d`.
pub fn mse(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    check_dim("mse rows", truth.nrows(), pred.nrows())?;
    check_dim("mse cols", truth.ncols(), pred.ncols())?;
    if truth.is_empty() {
        return Err(Error::EmptyInput("mse operands"));
    }
    Ok((pred - truth).norm_squared() / (truth.nrows() * truth.ncols()) as f64)
}
