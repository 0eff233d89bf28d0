mod common;

use bfly_core::fp16::{quantize_fp16, FP16_MAX};
use bfly_core::Error;
use rand::Rng;

/// Value of a binary16 bit pattern, decoded field by field. `None` for
/// infinities and NaNs.
fn decode(bits: u16) -> Option<f64> {
    let sign = if bits >> 15 == 1 { -1.0 } else { 1.0 };
    let exp = ((bits >> 10) & 0x1f) as i32;
    let frac = (bits & 0x3ff) as f64;
    match exp {
        0x1f => None,
        0 => Some(sign * frac * 2f64.powi(-24)),
        e => Some(sign * (1.0 + frac / 1024.0) * 2f64.powi(e - 15)),
    }
}

fn positive_table() -> Vec<f64> {
    (0u16..0x7c00).map(|b| decode(b).unwrap()).collect()
}

#[test]
fn every_finite_pattern_is_a_fixed_point() {
    let mut finite = 0;
    for bits in 0..=u16::MAX {
        if let Some(v) = decode(bits) {
            let q = quantize_fp16(v).unwrap();
            assert_eq!(q.to_bits(), v.to_bits(), "pattern {bits:#06x}");
            finite += 1;
        }
    }
    // 2 * (31 exponents * 1024 mantissas)
    assert_eq!(finite, 63488);
}

#[test]
fn midpoints_round_to_even_mantissa() {
    let t = positive_table();
    for (i, w) in t.windows(2).enumerate() {
        let mid = (w[0] + w[1]) / 2.0;
        let want = if i % 2 == 0 { w[0] } else { w[1] };
        assert_eq!(quantize_fp16(mid).unwrap(), want, "between {} and {}", w[0], w[1]);
        assert_eq!(quantize_fp16(-mid).unwrap(), -want);
    }
}

#[test]
fn random_values_go_to_nearest() {
    let t = positive_table();
    let mut r = common::rng(99);
    for _ in 0..200_000 {
        let x: f64 = if r.gen_bool(0.5) {
            r.gen_range(0.0..FP16_MAX)
        } else {
            r.gen_range(0.0..1e-3)
        };
        let q = quantize_fp16(x).unwrap();
        let i = t.partition_point(|v| *v <= x);
        let below = t[i - 1];
        let above = if i < t.len() { t[i] } else { f64::INFINITY };
        let best = if x - below <= above - x { below } else { above };
        let d = (q - x).abs();
        assert!(q == below || q == above, "{x} -> {q}");
        assert!(d <= (best - x).abs(), "{x} -> {q}, nearest {best}");
    }
}

#[test]
fn overflow_boundary() {
    // halfway between 65504 and the next (infinite) step, 65520, rounds away
    assert_eq!(quantize_fp16(65519.99).unwrap(), FP16_MAX);
    assert!(matches!(quantize_fp16(65520.0), Err(Error::Fp16Overflow { .. })));
    assert!(matches!(quantize_fp16(f64::INFINITY), Err(Error::Fp16Overflow { .. })));
    assert!(matches!(quantize_fp16(f64::NAN), Err(Error::NonFinite { .. })));
}
