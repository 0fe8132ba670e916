mod common;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use sketched_okr::kernels::{gram, GramMatrix, KernelSpec};
use sketched_okr::regression::{
    fit, fit_iokr, fit_isokr, fit_siokr, fit_sisokr, RidgeConfig, Variant,
};
use sketched_okr::sketch::{draw, SketchKind, SketchOperator, SketchSpec};

#[test]
fn sketched_fits_match_formula_transcription() {
    let mut rng = rng(101);
    for _ in 0..20 {
        let n = rng.random_range(4..=8);
        let inst = instance(&mut rng, n, 3);
        let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
        let cfg = RidgeConfig::new(lambda);
        let r_x = random_sketch(&mut rng, n);
        let r_y = random_sketch(&mut rng, n);
        let id = DMatrix::identity(n, n);
        let kx = inst.k_x.values();
        let ky = inst.k_y.values();

        let m = fit_sisokr(&inst.k_x, &inst.k_y, &r_x, &r_y, &cfg).unwrap();
        let oracle = oracle_coefficients(kx, ky, &r_x.to_dense(), &r_y.to_dense(), lambda, &inst.k_test);
        assert!(rel_err(&m.coefficients(&inst.k_test).unwrap(), &oracle) < 1e-10);

        let m = fit_siokr(&inst.k_x, &r_x, &cfg).unwrap();
        let oracle = oracle_coefficients(kx, ky, &r_x.to_dense(), &id, lambda, &inst.k_test);
        assert!(rel_err(&m.coefficients(&inst.k_test).unwrap(), &oracle) < 1e-10);

        let m = fit_isokr(&inst.k_x, &inst.k_y, &r_y, &cfg).unwrap();
        let oracle = oracle_coefficients(kx, ky, &id, &r_y.to_dense(), lambda, &inst.k_test);
        assert!(rel_err(&m.coefficients(&inst.k_test).unwrap(), &oracle) < 1e-10);
    }
}

#[test]
fn iokr_matches_dense_inverse_on_test_points() {
    let mut rng = rng(7);
    let inst = instance(&mut rng, 8, 4);
    let m = fit_iokr(&inst.k_x, &RidgeConfig::new(0.01)).unwrap();
    let oracle = oracle_iokr(inst.k_x.values(), 0.01, &inst.k_test);
    assert!(rel_err(&m.coefficients(&inst.k_test).unwrap(), &oracle) < 1e-10);
}

#[test]
fn identity_and_permutation_sketches_reduce_to_iokr() {
    let mut rng = rng(3);
    let n = 12;
    let inst = instance(&mut rng, n, 5);
    let cfg = RidgeConfig::new(1e-3);
    let exact = fit_iokr(&inst.k_x, &cfg)
        .unwrap()
        .coefficients(&inst.k_test)
        .unwrap();
    let perm = draw(&SketchSpec::new(SketchKind::Subsample, n, 17), n).unwrap();
    for r in [SketchOperator::identity(n), perm] {
        for variant in [Variant::Siokr, Variant::Isokr, Variant::Sisokr] {
            let m = fit(variant, &inst.k_x, &inst.k_y, Some(&r), Some(&r), &cfg).unwrap();
            let alpha = m.coefficients(&inst.k_test).unwrap();
            assert!(rel_err(&alpha, &exact) < 1e-8, "{variant}");
        }
    }
}

#[test]
fn row_scaling_of_sketches_is_invisible() {
    let mut rng = rng(11);
    let n = 7;
    let inst = instance(&mut rng, n, 3);
    let cfg = RidgeConfig::new(0.02);
    for kind in ALL_KINDS {
        let r_x = draw(&SketchSpec::sparsified(kind, 4, 0.7, 5), n).unwrap();
        let r_y = draw(&SketchSpec::sparsified(kind, 3, 0.7, 6), n).unwrap();
        let base = fit_sisokr(&inst.k_x, &inst.k_y, &r_x, &r_y, &cfg)
            .unwrap()
            .coefficients(&inst.k_test)
            .unwrap();
        for c in [-3.0, 0.25, 40.0] {
            let scaled_x = fit_sisokr(&inst.k_x, &inst.k_y, &r_x.scaled(c), &r_y, &cfg)
                .unwrap()
                .coefficients(&inst.k_test)
                .unwrap();
            let scaled_y = fit_sisokr(&inst.k_x, &inst.k_y, &r_x, &r_y.scaled(c), &cfg)
                .unwrap()
                .coefficients(&inst.k_test)
                .unwrap();
            assert!(rel_err(&scaled_x, &base) < 1e-9, "{kind:?} x {c}");
            assert!(rel_err(&scaled_y, &base) < 1e-9, "{kind:?} y {c}");
        }
    }
}

#[test]
fn coefficient_norm_shrinks_with_lambda() {
    let mut rng = rng(21);
    let n = 10;
    let inst = instance(&mut rng, n, 4);
    let r_x = draw(&SketchSpec::new(SketchKind::Gaussian, 5, 1), n).unwrap();
    let r_y = draw(&SketchSpec::new(SketchKind::Subsample, 6, 2), n).unwrap();
    for variant in Variant::ALL {
        let mut prev = f64::INFINITY;
        for e in -4..=6 {
            let cfg = RidgeConfig::new(10f64.powi(e));
            let m = fit(variant, &inst.k_x, &inst.k_y, Some(&r_x), Some(&r_y), &cfg).unwrap();
            let norm = m.coefficients(&inst.k_test).unwrap().norm();
            assert!(norm <= prev * (1.0 + 1e-12), "{variant} at 1e{e}");
            prev = norm;
        }
        assert!(prev < 1e-5, "{variant} did not shrink: {prev}");
    }
}

#[test]
fn training_permutation_leaves_predictions_unchanged() {
    let mut rng = rng(33);
    let n = 9;
    let inst = instance(&mut rng, n, 4);
    let cfg = RidgeConfig::new(5e-3);
    let perm: Vec<usize> = draw(&SketchSpec::new(SketchKind::Subsample, n, 4), n)
        .unwrap()
        .indices()
        .unwrap()
        .to_vec();
    let p = DMatrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
    let r_x = draw(&SketchSpec::new(SketchKind::Gaussian, 4, 8), n).unwrap().to_dense();
    let r_y = draw(&SketchSpec::sparsified(SketchKind::PSg, 5, 0.5, 9), n)
        .unwrap()
        .to_dense();

    let kx_p = GramMatrix::from_values(&p * inst.k_x.values() * p.transpose(), true).unwrap();
    let ky_p = GramMatrix::from_values(&p * inst.k_y.values() * p.transpose(), true).unwrap();
    let kt_p = &inst.k_test * p.transpose();
    // sketch columns follow the training points
    let rx_p = SketchOperator::from_dense(&r_x * p.transpose()).unwrap();
    let ry_p = SketchOperator::from_dense(&r_y * p.transpose()).unwrap();
    let rx = SketchOperator::from_dense(r_x).unwrap();
    let ry = SketchOperator::from_dense(r_y).unwrap();

    // compare predictions h(x) through their output-kernel scores on the training outputs
    for variant in Variant::ALL {
        let base = fit(variant, &inst.k_x, &inst.k_y, Some(&rx), Some(&ry), &cfg).unwrap();
        let permuted = fit(variant, &kx_p, &ky_p, Some(&rx_p), Some(&ry_p), &cfg).unwrap();
        let s_base = base.coefficients(&inst.k_test).unwrap() * inst.k_y.values();
        let s_perm = permuted.coefficients(&kt_p).unwrap() * ky_p.values() * &p;
        assert!(rel_err(&s_perm, &s_base) < 1e-9, "{variant}");
    }
}

#[test]
fn interpolation_limit_recovers_training_point() {
    let mut rng = rng(5);
    let n = 8;
    let x = uniform_matrix(&mut rng, n, 2);
    let spec = KernelSpec::Gaussian { sigma2: 0.3 };
    let k = gram(&spec, &x, &x).unwrap();
    let m = fit_iokr(&k, &RidgeConfig::new(1e-8)).unwrap();
    let alpha = m.coefficients(k.values()).unwrap();
    for i in 0..n {
        let row = alpha.row(i);
        let argmax = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax, i);
        assert!((row[i] - 1.0).abs() < 1e-3);
    }
}

#[test]
fn sketched_model_shapes() {
    let mut rng = rng(2);
    let n = 6;
    let inst = instance(&mut rng, n, 2);
    let cfg = RidgeConfig::new(0.1);
    let r_x = draw(&SketchSpec::new(SketchKind::Gaussian, 2, 1), n).unwrap();
    let r_y = draw(&SketchSpec::new(SketchKind::Gaussian, 3, 1), n).unwrap();
    assert_eq!(fit_siokr(&inst.k_x, &r_x, &cfg).unwrap().core().shape(), (6, 2));
    assert_eq!(fit_isokr(&inst.k_x, &inst.k_y, &r_y, &cfg).unwrap().core().shape(), (3, 6));
    assert_eq!(
        fit_sisokr(&inst.k_x, &inst.k_y, &r_x, &r_y, &cfg).unwrap().core().shape(),
        (2, 3)
    );
    assert!(fit_iokr(&inst.k_x, &cfg).unwrap().coefficients(&DMatrix::zeros(1, 5)).is_err());
}
