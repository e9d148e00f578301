//! Property tests for op invariants.

mod common;

use hint_core::ops::concat_rows;
use hint_core::Tensor;
use proptest::prelude::*;

fn finite_vec(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(lo..hi, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// softmax(x + c) == softmax(x) for any per-slice constant shift.
    #[test]
    fn softmax_shift_invariance(data in finite_vec(12, -5.0, 5.0), shift in -50.0f64..50.0) {
        let x = Tensor::from_vec(vec![3, 4], data.clone()).unwrap();
        let y = x.softmax(1).unwrap().to_vec();
        let shifted = Tensor::from_vec(vec![3, 4], data.iter().map(|v| v + shift).collect()).unwrap();
        let ys = shifted.softmax(1).unwrap().to_vec();
        for (a, b) in y.iter().zip(&ys) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    /// Every softmax slice is a probability distribution.
    #[test]
    fn softmax_simplex(data in finite_vec(20, -30.0, 30.0)) {
        let x = Tensor::from_vec(vec![4, 5], data).unwrap();
        let y = x.softmax(1).unwrap().to_vec();
        for row in y.chunks(5) {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    /// pixel_shuffle and pixel_unshuffle are exact inverses, bit for bit.
    #[test]
    fn pixel_shuffle_roundtrip(data in finite_vec(2 * 4 * 6, -10.0, 10.0)) {
        let x = Tensor::from_vec(vec![2, 4, 6], data).unwrap();
        let y = x.pixel_unshuffle(2).unwrap().pixel_shuffle(2).unwrap();
        prop_assert_eq!(y.to_vec(), x.to_vec());
        let z = Tensor::from_vec(vec![8, 2, 3], x.to_vec()).unwrap();
        let w = z.pixel_shuffle(2).unwrap().pixel_unshuffle(2).unwrap();
        prop_assert_eq!(w.to_vec(), z.to_vec());
    }

    /// Slicing a concat returns the original parts.
    #[test]
    fn concat_slice_inverse(a in finite_vec(6, -1.0, 1.0), b in finite_vec(9, -1.0, 1.0)) {
        let ta = Tensor::from_vec(vec![2, 3], a.clone()).unwrap();
        let tb = Tensor::from_vec(vec![3, 3], b.clone()).unwrap();
        let y = concat_rows(&[ta, tb]).unwrap();
        prop_assert_eq!(y.slice_rows(0, 2).unwrap().to_vec(), a);
        prop_assert_eq!(y.slice_rows(2, 3).unwrap().to_vec(), b);
    }
}
