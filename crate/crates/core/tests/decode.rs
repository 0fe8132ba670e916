mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sketched_okr::decode::{decode, decode_scores, score_matrix, CandidateSet};
use sketched_okr::kernels::{gram, kernel_diag, KernelSpec};
use sketched_okr::regression::{fit, FittedModel, RidgeConfig, Variant};
use sketched_okr::sketch::{draw, SketchKind, SketchOperator, SketchSpec};

fn fit_all(inst: &Instance, r_x: &SketchOperator, r_y: &SketchOperator, lambda: f64) -> Vec<FittedModel> {
    Variant::ALL
        .iter()
        .map(|&v| {
            fit(v, &inst.k_x, &inst.k_y, Some(r_x), Some(r_y), &RidgeConfig::new(lambda)).unwrap()
        })
        .collect()
}

/// `|h(x) - psi(c)|^2 = alpha^T K_Y alpha - 2 alpha^T k(., c) + k(c, c)`.
fn exhaustive_argmin(alpha: &DMatrix<f64>, k_y: &DMatrix<f64>, cand: &CandidateSet) -> Vec<usize> {
    (0..alpha.nrows())
        .map(|t| {
            let a = alpha.row(t).transpose();
            let self_term = (a.transpose() * k_y * &a)[(0, 0)];
            let mut best = (f64::INFINITY, 0);
            for j in 0..cand.len() {
                let d = self_term - 2.0 * a.dot(&cand.cross_gram.column(j)) + cand.diag[j];
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

#[test]
fn decode_matches_exhaustive_distance_search() {
    let mut rng = rng(404);
    let spec = KernelSpec::Gaussian { sigma2: 0.8 };
    for _ in 0..10 {
        let inst = instance(&mut rng, 6, 4);
        let cand_y = uniform_matrix(&mut rng, 5, 4);
        let cand = CandidateSet::from_features(&spec, &inst.y, &cand_y).unwrap();
        let r_x = random_sketch(&mut rng, 6);
        let r_y = random_sketch(&mut rng, 6);
        for model in fit_all(&inst, &r_x, &r_y, 1e-2) {
            let alpha = model.coefficients(&inst.k_test).unwrap();
            let oracle = exhaustive_argmin(&alpha, inst.k_y.values(), &cand);
            let got: Vec<usize> = decode(&model, &inst.k_test, &cand, 1)
                .unwrap()
                .iter()
                .map(|p| p.index)
                .collect();
            assert_eq!(got, oracle, "{}", model.variant());
        }
    }
}

#[test]
fn chained_scores_match_full_coefficient_path() {
    let mut rng = rng(9);
    let inst = instance(&mut rng, 6, 2);
    let cand_y = uniform_matrix(&mut rng, 4, 4);
    let cand =
        CandidateSet::from_features(&KernelSpec::Gaussian { sigma2: 0.8 }, &inst.y, &cand_y).unwrap();
    let r_x = draw(&SketchSpec::new(SketchKind::Gaussian, 3, 1), 6).unwrap();
    let r_y = draw(&SketchSpec::sparsified(SketchKind::PSr, 4, 0.5, 2), 6).unwrap();
    for model in fit_all(&inst, &r_x, &r_y, 0.05) {
        let s = score_matrix(&model, &inst.k_test, &cand).unwrap();
        let full = model.coefficients(&inst.k_test).unwrap() * &cand.cross_gram;
        assert!(rel_err(&s, &full) < 1e-10, "{}", model.variant());
        let zero = score_matrix(&model, &DMatrix::zeros(2, 6), &cand).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 4));
    }
}

#[test]
fn identity_sketch_scores_equal_iokr() {
    let mut rng = rng(12);
    let inst = instance(&mut rng, 10, 3);
    let cand = CandidateSet::from_features(
        &KernelSpec::Gaussian { sigma2: 0.8 },
        &inst.y,
        &uniform_matrix(&mut rng, 7, 4),
    )
    .unwrap();
    let id = SketchOperator::identity(10);
    let models = fit_all(&inst, &id, &id, 1e-3);
    let exact = score_matrix(&models[0], &inst.k_test, &cand).unwrap();
    for m in &models[1..] {
        assert!(rel_err(&score_matrix(m, &inst.k_test, &cand).unwrap(), &exact) < 1e-8);
    }
}

#[test]
fn single_candidate_always_wins() {
    let mut rng = rng(1);
    let inst = instance(&mut rng, 5, 3);
    let cand = CandidateSet::from_features(&KernelSpec::Linear, &inst.y, &inst.y.rows(2, 1).into_owned())
        .unwrap();
    let r = SketchOperator::identity(5);
    for model in fit_all(&inst, &r, &r, 0.1) {
        for p in decode(&model, &inst.k_test, &cand, 1).unwrap() {
            assert_eq!(p.index, 0);
        }
    }
}

#[test]
fn affine_diag_shift_topk_nesting_and_determinism() {
    let mut rng = rng(77);
    let inst = instance(&mut rng, 8, 6);
    let spec = KernelSpec::Linear;
    let cand_y = uniform_matrix(&mut rng, 9, 4);
    let cand = CandidateSet::from_features(&spec, &inst.y, &cand_y).unwrap();
    assert_eq!(cand.diag, kernel_diag(&spec, &cand_y).unwrap());
    let r_x = draw(&SketchSpec::new(SketchKind::Subsample, 5, 3), 8).unwrap();
    let r_y = draw(&SketchSpec::new(SketchKind::Gaussian, 4, 3), 8).unwrap();
    for model in fit_all(&inst, &r_x, &r_y, 1e-2) {
        let s = score_matrix(&model, &inst.k_test, &cand).unwrap();
        let shifted = cand.diag.add_scalar(3.5);
        let a = decode_scores(&s, &cand.diag, 1).unwrap();
        let b = decode_scores(&s, &shifted, 1).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.index, q.index);
        }
        let mut prev: Option<Vec<usize>> = None;
        for k in 1..=9 {
            let preds = decode_scores(&s, &cand.diag, k).unwrap();
            for (t, p) in preds.iter().enumerate() {
                assert_eq!(p.topk[0], a[t].index);
                assert_eq!(p.topk.len(), k);
                assert_eq!(p.score, cand.diag[p.index] - 2.0 * s[(t, p.index)]);
            }
            let firsts: Vec<usize> = preds.iter().map(|p| p.topk[0]).collect();
            if let Some(prev) = &prev {
                assert_eq!(prev, &firsts);
            }
            prev = Some(firsts);
        }
        assert_eq!(
            decode(&model, &inst.k_test, &cand, 3).unwrap(),
            decode(&model, &inst.k_test, &cand, 3).unwrap()
        );
    }
}

#[test]
fn chain_associations_agree_for_all_shapes() {
    let mut rng = rng(55);
    for _ in 0..10 {
        let n = rng.random_range(4..=8);
        let n_te = rng.random_range(1..6);
        let inst = instance(&mut rng, n, n_te);
        let n_c = rng.random_range(1..12);
        let cross = uniform_matrix(&mut rng, n, n_c);
        let cand = CandidateSet::unlabeled(cross.clone(), DVector::from_element(n_c, 1.0)).unwrap();
        let r_x = random_sketch(&mut rng, n);
        let r_y = random_sketch(&mut rng, n);
        for model in fit_all(&inst, &r_x, &r_y, 0.1) {
            let s = score_matrix(&model, &inst.k_test, &cand).unwrap();
            let left = model.input_features(&inst.k_test).unwrap();
            let right = model.output_side(&cross).unwrap();
            let coef = model.coefficients(&inst.k_test).unwrap();
            let mid = match model.variant() {
                Variant::Iokr | Variant::Sisokr => model.core().clone(),
                _ => model.core().transpose(),
            };
            let a = (&left * &mid) * &right;
            let b = &left * (&mid * &right);
            let c = coef * &cross;
            for other in [a, b, c] {
                assert!(rel_err(&s, &other) < 1e-9);
            }
        }
    }
    // candidate cross-gram must have one row per training point
    let inst = instance(&mut rng, 5, 2);
    let model = fit(Variant::Iokr, &inst.k_x, &inst.k_y, None, None, &RidgeConfig::new(1.0)).unwrap();
    let bad = CandidateSet::unlabeled(DMatrix::zeros(4, 2), DVector::from_element(2, 1.0)).unwrap();
    assert!(score_matrix(&model, &inst.k_test, &bad).is_err());
    let _ = gram(&KernelSpec::Linear, &inst.x, &inst.x_test).unwrap();
}
