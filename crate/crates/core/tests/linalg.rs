mod common;

use common::to_nalgebra;
use proptest::prelude::*;
use sparda_core::linalg::{psd_sqrt, symmetric_eigen};
use sparda_core::Matrix;

fn reconstruction_error(a: &Matrix) -> (f64, f64) {
    let e = symmetric_eigen(a).unwrap();
    let d = a.rows();
    let q = &e.vectors;
    let mut orth = 0.0f64;
    let mut recon = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            let qtq: f64 = (0..d).map(|k| q[(k, r)] * q[(k, c)]).sum();
            orth = orth.max((qtq - if r == c { 1.0 } else { 0.0 }).abs());
            let qlq: f64 = (0..d).map(|k| q[(r, k)] * e.values[k] * q[(c, k)]).sum();
            recon = recon.max((qlq - a[(r, c)]).abs());
        }
    }
    (orth, recon / a.max_abs().max(1.0))
}

#[test]
fn two_by_two() {
    let e = symmetric_eigen(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
    assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
}

#[test]
fn diagonal_input_gives_sorted_diagonal_and_permutation() {
    let e = symmetric_eigen(&Matrix::diagonal(&[0.5, 3.0, -1.0])).unwrap();
    assert_eq!(e.values, [3.0, 0.5, -1.0]);
    for k in 0..3 {
        let v = e.vector(k);
        assert_eq!(v.iter().filter(|c| c.abs() == 1.0).count(), 1);
        assert_eq!(v.iter().filter(|&&c| c == 0.0).count(), 2);
    }
}

#[test]
fn random_five_by_five_reassembles() {
    let mut r = common::rng(9);
    let raw = common::uniform_vec(&mut r, 25, -1.0, 1.0);
    let mut a = Matrix::from_vec(5, 5, raw).unwrap();
    a.symmetrize();
    let (orth, recon) = reconstruction_error(&a);
    assert!(orth <= 1e-8 && recon <= 1e-8);
}

#[test]
fn rejects_asymmetric_input() {
    assert!(symmetric_eigen(&Matrix::from_rows(&[[1.0, 0.2], [0.0, 1.0]]).unwrap()).is_err());
}

#[test]
fn psd_square_root_squares_back() {
    let a = Matrix::from_rows(&[[1.0, 0.2, 0.4], [0.2, 1.0, 0.0], [0.4, 0.0, 1.0]]).unwrap();
    let s = psd_sqrt(&a).unwrap();
    assert!(s.matmul(&s).unwrap().max_abs_diff(&a) < 1e-12);
    let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
    let s = psd_sqrt(&singular).unwrap();
    assert!(s.matmul(&s).unwrap().max_abs_diff(&singular) < 1e-12);
    assert!(psd_sqrt(&Matrix::diagonal(&[1.0, -0.5])).is_err());
}

fn symmetric(max_d: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_d).prop_flat_map(|d| {
        prop::collection::vec(-10.0f64..10.0, d * d).prop_map(move |v| {
            let mut m = Matrix::from_vec(d, d, v).unwrap();
            m.symmetrize();
            m
        })
    })
}

proptest! {
    #[test]
    fn decomposition_contract(a in symmetric(8)) {
        let (orth, recon) = reconstruction_error(&a);
        prop_assert!(orth <= 1e-8);
        prop_assert!(recon <= 1e-8);
        let e = symmetric_eigen(&a).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigenvalues_agree_with_reference(a in symmetric(8)) {
        let mut reference: Vec<f64> = to_nalgebra(&a).symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        let e = symmetric_eigen(&a).unwrap();
        for (x, y) in e.values.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-9 * a.max_abs().max(1.0));
        }
    }
}
