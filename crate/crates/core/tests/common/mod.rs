#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketched_okr::kernels::{gram, GramMatrix, KernelSpec};
use sketched_okr::sketch::{draw, SketchKind, SketchOperator, SketchSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Independent eigendecomposition pseudo-inverse used by the formula oracles.
pub fn oracle_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let cutoff = 1e-10 * eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cutoff {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / l;
        }
    }
    out
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Random regression instance with Gaussian input and output kernels.
pub struct Instance {
    pub k_x: GramMatrix,
    pub k_y: GramMatrix,
    pub k_test: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub x_test: DMatrix<f64>,
}

pub fn instance(rng: &mut ChaCha8Rng, n: usize, n_test: usize) -> Instance {
    let x = uniform_matrix(rng, n, 3);
    let y = uniform_matrix(rng, n, 4);
    let x_test = uniform_matrix(rng, n_test, 3);
    let kx_spec = KernelSpec::Gaussian { sigma2: 0.5 };
    let ky_spec = KernelSpec::Gaussian { sigma2: 0.8 };
    Instance {
        k_x: gram(&kx_spec, &x, &x).unwrap(),
        k_y: gram(&ky_spec, &y, &y).unwrap(),
        k_test: gram(&kx_spec, &x_test, &x).unwrap().into_values(),
        x,
        y,
        x_test,
    }
}

pub const ALL_KINDS: [SketchKind; 4] = [
    SketchKind::Subsample,
    SketchKind::Gaussian,
    SketchKind::PSr,
    SketchKind::PSg,
];

pub fn random_sketch(rng: &mut ChaCha8Rng, n: usize) -> SketchOperator {
    let kind = ALL_KINDS[rng.random_range(0..4)];
    let m = rng.random_range(1..=n);
    draw(&SketchSpec::sparsified(kind, m, 0.6, rng.random()), n).unwrap()
}

/// Literal dense transcription of the sketched coefficient formula
/// `alpha(x) = R_y^T pinv(R_y K_Y R_y^T) R_y K_Y K_X R_x^T
///             pinv(R_x K_X^2 R_x^T + n lambda R_x K_X R_x^T) R_x kappa(x)`.
/// Returns the coefficient rows for the test cross-Gram.
pub fn oracle_coefficients(
    k_x: &DMatrix<f64>,
    k_y: &DMatrix<f64>,
    r_x: &DMatrix<f64>,
    r_y: &DMatrix<f64>,
    lambda: f64,
    k_test: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = k_x.nrows() as f64;
    let kx2 = k_x * k_x;
    let inner = r_x * &kx2 * r_x.transpose() + (r_x * k_x * r_x.transpose()) * (n * lambda);
    let ky_tilde = r_y * k_y * r_y.transpose();
    let omega = oracle_pinv(&ky_tilde) * r_y * k_y * k_x * r_x.transpose() * oracle_pinv(&inner);
    let alpha = r_y.transpose() * omega * r_x * k_test.transpose();
    alpha.transpose()
}

/// `(K_X + n lambda I)^{-1}` applied to each test kernel row, via a dense inverse.
pub fn oracle_iokr(k_x: &DMatrix<f64>, lambda: f64, k_test: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k_x.nrows();
    let inv = (k_x + DMatrix::identity(n, n) * (n as f64 * lambda))
        .try_inverse()
        .unwrap();
    (inv * k_test.transpose()).transpose()
}
