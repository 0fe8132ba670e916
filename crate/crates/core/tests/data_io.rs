mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use sha2::{Digest, Sha256};
use sketched_okr::data_io::*;
use sketched_okr::kernels::{gram, KernelSpec};
use sketched_okr::metrics::LabelSet;
use sketched_okr::regression::{fit, RidgeConfig, Variant};
use sketched_okr::sketch::{draw, SketchKind, SketchSpec};
use sketched_okr::Error;

#[test]
fn small_matrix_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 1e10, 0.0, -0.0]);
    let path = dir.path().join("m.skmx");
    save_matrix(&m, &path).unwrap();
    assert_eq!(load_matrix(&path).unwrap(), m);
    std::fs::write(dir.path().join("empty.skmx"), b"").unwrap();
    let err = load_matrix(dir.path().join("empty.skmx")).unwrap_err();
    assert!(matches!(err, Error::BadMagic));
    assert_eq!(err.to_string(), "bad magic");
}

#[test]
fn large_random_round_trip_is_byte_identical() {
    let mut rng = rng(1000);
    let m = DMatrix::from_fn(1000, 1000, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.skmx");
    save_matrix(&m, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let mut expected = Vec::with_capacity(8_000_000);
    for i in 0..1000 {
        for j in 0..1000 {
            expected.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    assert_eq!(Sha256::digest(&bytes[24..]), Sha256::digest(&expected));
    let back = load_matrix(&path).unwrap();
    assert_eq!(Sha256::digest(encode_matrix(&back)), Sha256::digest(&bytes));
}

#[test]
fn gram_sidecar_round_trip() {
    let mut rng = rng(2);
    let x = uniform_matrix(&mut rng, 5, 2);
    let g = gram(&KernelSpec::Gaussian { sigma2: 1.0 }, &x, &x).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("k.skmx");
    save_gram(&g, &p).unwrap();
    let back = load_gram(&p).unwrap();
    assert!(back.is_symmetric());
    assert_eq!(back.values(), g.values());
}

#[test]
fn random_label_file_round_trip() {
    let mut rng = rng(4);
    let n_labels = 30;
    let sets: Vec<LabelSet> = (0..50)
        .map(|_| LabelSet::new((0..n_labels).filter(|_| rng.random_bool(0.2)).collect()).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("y.labels");
    save_labels(&sets, n_labels, &p).unwrap();
    let (back, l) = load_labels(&p).unwrap();
    assert_eq!(l, n_labels);
    assert_eq!(back, sets);
    let ind = load_outputs(&p).unwrap();
    assert_eq!(ind, labels_to_matrix(&sets, n_labels));
    for (i, s) in sets.iter().enumerate() {
        assert_eq!(&LabelSet::from_indicator(ind.row(i).iter().copied()), s);
    }
}

#[test]
fn model_round_trip_reproduces_coefficients() {
    let mut rng = rng(6);
    let inst = instance(&mut rng, 12, 4);
    let dir = tempfile::tempdir().unwrap();
    let r_x = draw(&SketchSpec::new(SketchKind::Gaussian, 5, 1), 12).unwrap();
    let r_y = draw(&SketchSpec::sparsified(SketchKind::PSr, 4, 0.5, 2), 12).unwrap();
    for variant in Variant::ALL {
        let m = fit(variant, &inst.k_x, &inst.k_y, Some(&r_x), Some(&r_y), &RidgeConfig::new(0.01))
            .unwrap();
        let sub = dir.path().join(variant.to_string());
        std::fs::create_dir(&sub).unwrap();
        save_model(&m, Some(KernelSpec::Gaussian { sigma2: 0.5 }), None, &sub).unwrap();
        let (back, manifest) = load_model(&sub).unwrap();
        assert_eq!(manifest.variant, variant);
        assert_eq!(manifest.input_kernel, Some(KernelSpec::Gaussian { sigma2: 0.5 }));
        assert_eq!(
            back.coefficients(&inst.k_test).unwrap(),
            m.coefficients(&inst.k_test).unwrap()
        );
    }
}

#[test]
fn sorted_json_orders_keys() {
    let mut map = std::collections::HashMap::new();
    map.insert("zeta", 1.0);
    map.insert("alpha", 2.0);
    map.insert("mse", 0.5);
    let s = to_sorted_json(&map).unwrap();
    let a = s.find("alpha").unwrap();
    let m = s.find("mse").unwrap();
    let z = s.find("zeta").unwrap();
    assert!(a < m && m < z);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_round_trip(rows in 0usize..12, cols in 0usize..12, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| {
            f64::from_bits(rng.random::<u64>() & !(0x7ffu64 << 52) | (rng.random_range(1u64..2046) << 52))
        });
        let bytes = encode_matrix(&m);
        prop_assert_eq!(bytes.len(), 24 + 8 * rows * cols);
        let back = decode_matrix(&bytes).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.iter().zip(m.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_rejected(cut in 1usize..40) {
        let bytes = encode_matrix(&DMatrix::from_element(2, 2, 1.0));
        prop_assert!(decode_matrix(&bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn csv_mirror_loads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let m = DMatrix::from_fn(7, 3, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0) - 0.1);
    save_matrix_with_csv(&m, dir.path(), "m").unwrap();
    assert_eq!(load_matrix(dir.path().join("m.csv")).unwrap(), m);
}

#[test]
fn csv_rejects_ragged_rows_and_junk() {
    assert!(parse_csv_matrix("1,2\n3\n").is_err());
    assert!(parse_csv_matrix("1,x\n").is_err());
    assert!(parse_csv_matrix("1,inf\n").is_err());
    assert_eq!(parse_csv_matrix("1, 2\n\n3,4\n").unwrap().shape(), (2, 2));
}
