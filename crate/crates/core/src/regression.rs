//! Closed-form output kernel ridge estimators, exact and sketched.
//!
//! Every variant predicts `h(x) = sum_i alpha_i(x) psi(y_i)` with
//! coefficients of the form
//!
//! ```text
//! alpha(x)^T = (kappa_x^T L) M R
//! ```
//!
//! where `L` is `R_x^T` (or the identity), `R` is `R_y` (or the identity)
//! and `M` is the fitted core in row orientation. The regularization is
//! applied as `n * lambda`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;
use crate::linalg::{reg_solve, sym_pinv, SolveOptions};
use crate::sketch::{symmetrize, SketchOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Iokr,
    Siokr,
    Isokr,
    Sisokr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Iokr, Variant::Siokr, Variant::Isokr, Variant::Sisokr];

    pub fn sketches_input(&self) -> bool {
        matches!(self, Variant::Siokr | Variant::Sisokr)
    }

    pub fn sketches_output(&self) -> bool {
        matches!(self, Variant::Isokr | Variant::Sisokr)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Iokr => "iokr",
            Variant::Siokr => "siokr",
            Variant::Isokr => "isokr",
            Variant::Sisokr => "sisokr",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub lambda: f64,
    #[serde(default)]
    pub solve: SolveOptions,
}

impl RidgeConfig {
    pub fn new(lambda: f64) -> Self {
        RidgeConfig {
            lambda,
            solve: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        self.solve.validate()
    }
}

/// A fitted estimator: the dual core plus the sketches needed at predict time.
#[derive(Clone, Debug)]
pub struct FittedModel {
    variant: Variant,
    core: DMatrix<f64>,
    input_sketch: Option<SketchOperator>,
    output_sketch: Option<SketchOperator>,
    n_train: usize,
    lambda: f64,
    // core in `(kappa^T L) M` orientation
    middle: DMatrix<f64>,
}

impl FittedModel {
    /// Assembles a model from stored parts, checking every shape.
    ///
    /// Core shapes: iokr `n x n`, siokr `n x m_x`, isokr `m_y x n`,
    /// sisokr `m_x x m_y`.
    pub fn from_parts(
        variant: Variant,
        core: DMatrix<f64>,
        input_sketch: Option<SketchOperator>,
        output_sketch: Option<SketchOperator>,
        n_train: usize,
        lambda: f64,
    ) -> Result<Self> {
        if variant.sketches_input() != input_sketch.is_some()
            || variant.sketches_output() != output_sketch.is_some()
        {
            return Err(Error::InvalidParameter(format!(
                "sketch presence does not match variant {variant}"
            )));
        }
        for r in input_sketch.iter().chain(output_sketch.iter()) {
            check_dim("sketch columns vs n_train", n_train, r.n())?;
        }
        let mx = input_sketch.as_ref().map(|r| r.m());
        let my = output_sketch.as_ref().map(|r| r.m());
        let (rows, cols) = match variant {
            Variant::Iokr => (n_train, n_train),
            Variant::Siokr => (n_train, mx.unwrap_or(0)),
            Variant::Isokr => (my.unwrap_or(0), n_train),
            Variant::Sisokr => (mx.unwrap_or(0), my.unwrap_or(0)),
        };
        check_dim("core rows", rows, core.nrows())?;
        check_dim("core cols", cols, core.ncols())?;
        let middle = match variant {
            Variant::Iokr | Variant::Sisokr => core.clone(),
            Variant::Siokr | Variant::Isokr => core.transpose(),
        };
        Ok(FittedModel {
            variant,
            core,
            input_sketch,
            output_sketch,
            n_train,
            lambda,
            middle,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    pub fn input_sketch(&self) -> Option<&SketchOperator> {
        self.input_sketch.as_ref()
    }

    pub fn output_sketch(&self) -> Option<&SketchOperator> {
        self.output_sketch.as_ref()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `K_test_train L`: the test cross-Gram with the input sketch applied.
    pub fn input_features(&self, k_test_train: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("test cross-gram columns", self.n_train, k_test_train.ncols())?;
        match &self.input_sketch {
            Some(r) => r.apply_right_transpose(k_test_train),
            None => Ok(k_test_train.clone()),
        }
    }

    /// `R_y Z` for an `n_train x c` operand (identity when outputs are not sketched).
    pub fn output_side(&self, right: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim("output operand rows", self.n_train, right.nrows())?;
        match &self.output_sketch {
            Some(r) => r.apply_left(right),
            None => Ok(right.clone()),
        }
    }

    /// Dual coefficients, one row `alpha(x_t)^T` per test input.
    pub fn coefficients(&self, k_test_train: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let left = self.input_features(k_test_train)? * &self.middle;
        match &self.output_sketch {
            Some(r) => Ok(r.apply_transpose_left(&left.transpose())?.transpose()),
            None => Ok(left),
        }
    }

    /// `K_test_train * (coefficient chain) * right` evaluated with the
    /// sketches applied first and the cheaper association of the three-factor
    /// product. `right` has one row per training point (a candidate
    /// cross-Gram, or training outputs for the linear output kernel).
    pub fn apply_chain(
        &self,
        k_test_train: &DMatrix<f64>,
        right: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let left = self.input_features(k_test_train)?;
        let right = self.output_side(right)?;
        Ok(chain_product(&left, &self.middle, &right))
    }

    /// Predictions in output coordinates, `alpha(x)^T Y_train`. Meaningful for
    /// the linear output kernel, where `psi(y) = y`.
    pub fn predict_outputs(
        &self,
        k_test_train: &DMatrix<f64>,
        y_train: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        self.apply_chain(k_test_train, y_train)
    }
}

/// `a * b * c` with the association that needs fewer multiply-adds.
pub fn chain_product(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q, r, s) = (a.nrows(), a.ncols(), b.ncols(), c.ncols());
    let left_first = p * q * r + p * r * s;
    let right_first = q * r * s + p * q * s;
    if left_first <= right_first {
        (a * b) * c
    } else {
        a * (b * c)
    }
}

fn check_inputs(k_x: &GramMatrix, cfg: &RidgeConfig) -> Result<usize> {
    cfg.validate()?;
    let n = k_x.square_dim()?;
    if n == 0 {
        return Err(Error::EmptyInput("training gram"));
    }
    Ok(n)
}

/// Exact estimator: core `(K_X + n lambda I)^{-1}`.
pub fn fit_iokr(k_x: &GramMatrix, cfg: &RidgeConfig) -> Result<FittedModel> {
    let n = check_inputs(k_x, cfg)?;
    let shift = n as f64 * cfg.lambda;
    let inv = reg_solve(k_x.values(), shift, &DMatrix::identity(n, n), &cfg.solve)?;
    FittedModel::from_parts(Variant::Iokr, symmetrize(inv), None, None, n, cfg.lambda)
}

/// `G = R_x K_X` and the pseudo-inverse of `G G^T + n lambda R_x K_X R_x^T`.
fn input_chain(
    k_x: &GramMatrix,
    r_x: &SketchOperator,
    n: usize,
    cfg: &RidgeConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dim("input sketch columns", n, r_x.n())?;
    let g = r_x.apply_left(k_x.values())?;
    let k_tilde = symmetrize(r_x.apply_right_transpose(&g)?);
    let system = symmetrize(&g * g.transpose()) + k_tilde * (n as f64 * cfg.lambda);
    let pinv = sym_pinv(&system, cfg.solve.pinv_rtol)?;
    Ok((g, pinv))
}

/// `pinv(R_y K_Y R_y^T)` and `R_y K_Y`.
fn output_chain(
    k_y: &GramMatrix,
    r_y: &SketchOperator,
    n: usize,
    cfg: &RidgeConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dim("output gram size", n, k_y.square_dim()?)?;
    check_dim("output sketch columns", n, r_y.n())?;
    let ryky = r_y.apply_left(k_y.values())?;
    let k_tilde = symmetrize(r_y.apply_right_transpose(&ryky)?);
    Ok((sym_pinv(&k_tilde, cfg.solve.pinv_rtol)?, ryky))
}

/// Input-sketched estimator: core `K_X R_x^T pinv(R_x K_X^2 R_x^T + n lambda K~_X)`.
pub fn fit_siokr(
    k_x: &GramMatrix,
    r_x: &SketchOperator,
    cfg: &RidgeConfig,
) -> Result<FittedModel> {
    let n = check_inputs(k_x, cfg)?;
    let (g, pinv) = input_chain(k_x, r_x, n, cfg)?;
    let core = g.transpose() * pinv;
    FittedModel::from_parts(Variant::Siokr, core, Some(r_x.clone()), None, n, cfg.lambda)
}

/// Output-sketched estimator: core `pinv(K~_Y) R_y K_Y (K_X + n lambda I)^{-1}`.
pub fn fit_isokr(
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    r_y: &SketchOperator,
    cfg: &RidgeConfig,
) -> Result<FittedModel> {
    let n = check_inputs(k_x, cfg)?;
    let (ky_pinv, ryky) = output_chain(k_y, r_y, n, cfg)?;
    let solved = reg_solve(
        k_x.values(),
        n as f64 * cfg.lambda,
        &ryky.transpose(),
        &cfg.solve,
    )?;
    let core = ky_pinv * solved.transpose();
    FittedModel::from_parts(Variant::Isokr, core, None, Some(r_y.clone()), n, cfg.lambda)
}

/// Doubly sketched estimator. With `G = R_x K_X`:
/// `Omega = pinv(K~_Y) (R_y K_Y G^T) pinv(G G^T + n lambda K~_X)`, stored
/// transposed (`m_x x m_y`). `K_X^2` is never formed.
pub fn fit_sisokr(
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    r_x: &SketchOperator,
    r_y: &SketchOperator,
    cfg: &RidgeConfig,
) -> Result<FittedModel> {
    let n = check_inputs(k_x, cfg)?;
    let (g, a_pinv) = input_chain(k_x, r_x, n, cfg)?;
    let (ky_pinv, ryky) = output_chain(k_y, r_y, n, cfg)?;
    let b = ryky * g.transpose();
    let omega = ky_pinv * b * a_pinv;
    FittedModel::from_parts(
        Variant::Sisokr,
        omega.transpose(),
        Some(r_x.clone()),
        Some(r_y.clone()),
        n,
        cfg.lambda,
    )
}

/// Dispatches on `variant`; sketches a variant does not use are ignored.
pub fn fit(
    variant: Variant,
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    r_x: Option<&SketchOperator>,
    r_y: Option<&SketchOperator>,
    cfg: &RidgeConfig,
) -> Result<FittedModel> {
    let need = |r: Option<&SketchOperator>, what: &str| {
        r.cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("{variant} needs an {what} sketch")))
    };
    match variant {
        Variant::Iokr => fit_iokr(k_x, cfg),
        Variant::Siokr => fit_siokr(k_x, &need(r_x, "input")?, cfg),
        Variant::Isokr => fit_isokr(k_x, k_y, &need(r_y, "output")?, cfg),
        Variant::Sisokr => fit_sisokr(
            k_x,
            k_y,
            &need(r_x, "input")?,
            &need(r_y, "output")?,
            cfg,
        ),
    }
}
