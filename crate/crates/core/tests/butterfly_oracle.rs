mod common;

use bfly_core::butterfly::*;
use bfly_core::Error;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn butterfly_matches_stage_product() {
    let mut r = rng(11);
    for bits in 1..=7 {
        let n = 1 << bits;
        for _ in 0..5 {
            let m = random_butterfly(n, &mut r);
            let dense = dense_oracle(&m);
            let lib = expand_dense(&m);
            for i in 0..n {
                for j in 0..n {
                    assert!((dense[i][j] - lib.get(i, j)).abs() < 1e-12);
                }
            }
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            let want = matvec(&dense, &x);
            let got = apply_butterfly(&m, &x).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn dense_expansion_is_sparse_per_stage() {
    // each stage has exactly two nonzeros per row for generic coefficients
    let mut r = rng(3);
    let m = random_butterfly(64, &mut r);
    for st in m.stages() {
        assert_eq!(stage_dense(64, st).nonzeros(), 128);
    }
}

#[test]
fn fft_matches_naive_dft() {
    let mut r = rng(5);
    for bits in 0..=12 {
        let n = 1 << bits;
        let x = random_complex(n, &mut r);
        let got = to_complex(&fft(&x).unwrap());
        let want = naive_dft(&to_complex(&x));
        assert!(rel_l2(&got, &want) < 1e-9, "n = {n}");
    }
}

#[test]
fn fft_known_transforms() {
    // impulse -> all ones; constant -> N at bin 0
    let n = 16;
    let mut imp = ComplexVec::zeros(n);
    imp.set(0, Complex64::new(1.0, 0.0));
    let y = fft(&imp).unwrap();
    assert!(y.iter().all(|v| v == Complex64::new(1.0, 0.0)));
    let ones = ComplexVec::from_real(&vec![1.0; n]);
    let y = fft(&ones).unwrap();
    assert_eq!(y.get(0), Complex64::new(n as f64, 0.0));
    for k in 1..n {
        assert!(y.get(k).norm() < 1e-12);
    }
}

#[test]
fn fft_butterfly_path_bit_agrees() {
    let mut r = rng(8);
    for bits in 1..=12 {
        let n = 1 << bits;
        let x = random_complex(n, &mut r);
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        let (a, ca) = fft_with(&x, Precision::Fp64, Some(&mut t1)).unwrap();
        let m = fft_as_butterfly(n).unwrap();
        let (b, cb) = apply_fft_butterfly(&m, &x, Precision::Fp64, Some(&mut t2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(t1, t2);
        assert_eq!(ca, cb);
        assert_eq!(ca.real_mults, 4 * (n as u64 / 2) * bits as u64);
    }
}

#[test]
fn fft_rejects_bad_lengths() {
    assert!(matches!(fft(&ComplexVec::zeros(12)), Err(Error::NotPowerOfTwo(12))));
    assert!(matches!(fft(&ComplexVec::zeros(0)), Err(Error::NotPowerOfTwo(0))));
}

#[test]
fn fp16_butterfly_stays_close() {
    let mut r = rng(21);
    let n = 256;
    let m = ButterflyMatrix::from_fn(n, |_, _| {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [
            s * r.gen_range(0.5..1.0),
            s * r.gen_range(0.5..1.0),
            s * r.gen_range(0.5..1.0),
            -s * r.gen_range(0.5..1.0),
        ]
    })
    .unwrap();
    let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 11.0 - 0.5).collect();
    let exact = apply_butterfly(&m, &x).unwrap();
    let (half, _) = apply_butterfly_counted(&m, &x, Precision::Fp16).unwrap();
    let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = half.iter().zip(&exact).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    // eight rounding steps of 2^-11 relative each
    assert!(err <= 8.0 * 2f64.powi(-11) * scale.max(1.0), "{err}");
}

#[test]
fn bu_step_mode_guard() {
    let op = BuOperands::Linear {
        in1: 1.0,
        in2: 2.0,
        w: [1.0, 0.0, 0.0, 1.0],
    };
    assert!(matches!(
        bu_step(BuMode::Fft, op, Precision::Fp64),
        Err(Error::ModeMismatch { .. })
    ));
    let op = BuOperands::Linear {
        in1: f64::NAN,
        in2: 2.0,
        w: [1.0; 4],
    };
    assert!(bu_step(BuMode::ButterflyLinear, op, Precision::Fp64).is_err());
}

#[test]
fn json_round_trip_and_rejection() {
    let mut r = rng(1);
    let m = random_butterfly(8, &mut r);
    let back = ButterflyMatrix::from_json(&m.to_json()).unwrap();
    assert_eq!(back, m);
    let bad = r#"{"size":4,"stages":[{"level":0,"pairs":[[1,0,0,1],[1,0,0,1]]}]}"#;
    assert!(ButterflyMatrix::from_json(bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn butterfly_is_linear(bits in 1usize..8, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let n = 1 << bits;
        let mut r = rng(seed);
        let m = random_butterfly(n, &mut r);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = apply_butterfly(&m, &mix).unwrap();
        let fx = apply_butterfly(&m, &x).unwrap();
        let fy = apply_butterfly(&m, &y).unwrap();
        for i in 0..n {
            let rhs = a * fx[i] + b * fy[i];
            prop_assert!((lhs[i] - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn op_counts_are_exact(bits in 1usize..11) {
        let n = 1usize << bits;
        let m = ButterflyMatrix::identity(n).unwrap();
        let (_, c) = apply_butterfly_counted(&m, &vec![1.0; n], Precision::Fp64).unwrap();
        let pairs = (n / 2 * bits) as u64;
        prop_assert_eq!(c.bu_steps, pairs);
        prop_assert_eq!(c.real_mults, 4 * pairs);
        prop_assert_eq!(c.real_adds, 2 * pairs);
        prop_assert_eq!(m.param_count(), 2 * n * bits);
    }

    #[test]
    fn ifft_inverts_fft(bits in 0usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_complex(1 << bits, &mut r);
        let back = ifft(&fft(&x).unwrap()).unwrap();
        prop_assert!(rel_l2(&to_complex(&back), &to_complex(&x)) < 1e-12);
    }

    #[test]
    fn parseval(bits in 0usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 1usize << bits;
        let x = random_complex(n, &mut r);
        let y = fft(&x).unwrap();
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        prop_assert!((ex - ey).abs() < 1e-9 * ex.max(1.0));
    }

    #[test]
    fn twiddles_on_unit_circle(bits in 0u32..14, k in any::<usize>()) {
        let n = 1usize << bits;
        let w = twiddle(n, k);
        prop_assert!((w.norm() - 1.0).abs() < 1e-15);
    }
}
