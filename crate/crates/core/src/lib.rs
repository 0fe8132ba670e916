//! Sketched input/output kernel ridge regression for structured prediction.
//!
//! The surrogate approach regresses the output feature map `psi(y)` on the
//! inputs with kernel ridge regression, then decodes by searching a
//! candidate set for the output closest to the prediction. Random sketches
//! `R_x` and `R_y` restrict the input and output feature spaces to random
//! subspaces: input sketching shrinks the system solved at training time to
//! `m_x x m_x`, output sketching shrinks the decode product to
//! `n_te x m_x`, `m_x x m_y`, `m_y x n_c` factors.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | Gaussian, linear and Tanimoto-Gaussian kernels; Gram matrices |
//! | [`sketch`] | sub-sampling, Gaussian and p-sparsified sketch operators |
//! | [`linalg`] | regularized Cholesky solves, eigendecomposition pseudo-inverses |
//! | [`regression`] | IOKR, SIOKR, ISOKR and SISOKR estimators |
//! | [`decode`] | candidate scoring and top-k decoding |
//! | [`diagnostics`] | reconstruction error and effective dimension |
//! | [`synthetic`] | synthetic least-squares data with power-law spectra |
//! | [`metrics`] | example-based F1, top-k accuracy, kernel loss |
//! | [`data_io`] | matrix/label files, run configuration, model files |
//! | [`experiment`] | timing and benchmark cells |

pub mod data_io;
pub mod decode;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod regression;
pub mod sketch;
pub mod synthetic;

pub use decode::{decode, score_matrix, CandidateSet, Prediction};
pub use error::{Error, Result};
pub use kernels::{eval_kernel, gram, GramMatrix, KernelSpec};
pub use linalg::{reg_solve, sym_pinv, SolveOptions};
pub use regression::{
    fit, fit_iokr, fit_isokr, fit_siokr, fit_sisokr, FittedModel, RidgeConfig, Variant,
};
pub use sketch::{draw, SketchKind, SketchOperator, SketchSpec};

pub use nalgebra::{DMatrix, DVector};
