mod common;

use std::f64::consts::PI;

use csrecon::rng::SeededRng;
use csrecon::transforms::{dct_line, hilbert_envelope, idct_line, to_bmode, EnvelopeParams};
use csrecon::RfFrame;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_vec(m: usize, seed: u64) -> DVector<f64> {
    let mut rng = SeededRng::new(seed);
    DVector::from_fn(m, |_, _| rng.gaussian())
}

#[test]
fn dct_matches_dense_matrix() {
    for (m, seed) in [(1, 1), (8, 2), (17, 3), (64, 4), (100, 5)] {
        let x = random_vec(m, seed);
        let expected = common::dct_matrix(m) * &x;
        let got = dct_line(&x).unwrap();
        assert!((got - expected).amax() < 1e-10, "M={m}");
    }
}

#[test]
fn dct_of_impulse_is_first_matrix_column() {
    let mut x = DVector::zeros(8);
    x[0] = 1.0;
    let c = dct_line(&x).unwrap();
    let col = common::dct_matrix(8).column(0).into_owned();
    assert!((c - col).amax() < 1e-12);
}

#[test]
fn inverse_examples() {
    let c = DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0]);
    let x = idct_line(&c).unwrap();
    assert!(x.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    let x = random_vec(512, 9);
    let back = idct_line(&dct_line(&x).unwrap()).unwrap();
    assert!((back - x).amax() < 1e-10);
}

#[test]
fn envelope_matches_naive_dft() {
    for (m, seed) in [(64, 11), (63, 12), (2, 13), (3, 14)] {
        let x = random_vec(m, seed);
        let expected = common::naive_envelope(x.as_slice());
        let got = hilbert_envelope(&x).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-10, "M={m}: {g} vs {e}");
        }
    }
}

#[test]
fn cosine_has_unit_envelope_inside() {
    let m = 256;
    let x = DVector::from_fn(m, |t, _| (2.0 * PI * 8.0 * t as f64 / m as f64).cos());
    let env = hilbert_envelope(&x).unwrap();
    for t in 16..240 {
        assert!((env[t] - 1.0).abs() < 2e-2, "t={t}: {}", env[t]);
    }
    assert!(hilbert_envelope(&DVector::zeros(16))
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn constant_envelope_frame_is_black() {
    // A full-period cosine has a flat analytic-signal modulus.
    let m = 64;
    let frame = DMatrix::from_fn(m, 3, |t, _| (2.0 * PI * 4.0 * t as f64 / m as f64).cos());
    let img = to_bmode(&RfFrame::new(frame).unwrap(), &EnvelopeParams::default()).unwrap();
    assert!(img.pixels().iter().all(|&v| v == 0.0));
}

fn frame_strategy() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..40, 1usize..5, any::<u64>()).prop_map(|(m, l, seed)| {
        let mut rng = SeededRng::new(seed);
        DMatrix::from_fn(m, l, |_, _| rng.gaussian())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dct_is_orthonormal(m in 1usize..1025, seed in any::<u64>()) {
        let x = random_vec(m, seed);
        let c = dct_line(&x).unwrap();
        prop_assert!((c.norm() - x.norm()).abs() < 1e-10 * x.norm().max(1.0));
        let back = idct_line(&c).unwrap();
        prop_assert!((back - x).amax() < 1e-10);
    }

    #[test]
    fn dct_is_linear(m in 1usize..200, seed in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let x = random_vec(m, seed);
        let y = random_vec(m, seed ^ 1);
        let lhs = dct_line(&(&x * a + &y * b)).unwrap();
        let rhs = dct_line(&x).unwrap() * a + dct_line(&y).unwrap() * b;
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn envelope_is_sign_symmetric(m in 2usize..300, seed in any::<u64>()) {
        let x = random_vec(m, seed);
        prop_assert_eq!(hilbert_envelope(&x).unwrap(), hilbert_envelope(&(-&x)).unwrap());
    }

    #[test]
    fn bmode_spans_unit_interval(f in frame_strategy()) {
        let img = to_bmode(&RfFrame::new(f).unwrap(), &EnvelopeParams::default()).unwrap();
        let (lo, hi) = (img.pixels().min(), img.pixels().max());
        prop_assert!(lo == 0.0);
        prop_assert!(hi == 1.0 || hi == 0.0);
    }

    #[test]
    fn bmode_ignores_positive_scale(f in frame_strategy(), scale in 1e-6f64..1e6) {
        let p = EnvelopeParams::default();
        let a = to_bmode(&RfFrame::new(f.clone()).unwrap(), &p).unwrap();
        let b = to_bmode(&RfFrame::new(f * scale).unwrap(), &p).unwrap();
        prop_assert!((a.pixels() - b.pixels()).amax() < 1e-9);
    }
}
