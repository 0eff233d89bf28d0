//! IEEE 754 binary16 rounding, used by the bit-faithful evaluation mode.
//!
//! Values are rounded to the nearest representable half-precision number
//! (ties to even) and handed back widened to `f64`.

use crate::error::{Error, Result};

/// Largest finite binary16 value.
pub const FP16_MAX: f64 = 65504.0;
/// Smallest positive normal binary16 value, 2^-14.
pub const FP16_MIN_NORMAL: f64 = 6.103515625e-5;
/// Spacing of subnormals, 2^-24.
pub const FP16_SUBNORMAL_ULP: f64 = 5.960464477539063e-8;

/// Round `x` to binary16 (round-to-nearest-even).
///
/// Magnitudes at or above 65520 round to infinity in binary16; that case is
/// reported as [`Error::Fp16Overflow`] rather than silently returned.
pub fn quantize_fp16(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite {
            context: "quantize_fp16",
            value: x,
        });
    }
    if x.is_infinite() {
        return Err(Error::Fp16Overflow { value: x });
    }
    let a = x.abs();
    if a == 0.0 {
        return Ok(x);
    }
    let ulp = if a < FP16_MIN_NORMAL {
        FP16_SUBNORMAL_ULP
    } else {
        // unbiased exponent of a normal f64
        let e = ((a.to_bits() >> 52) & 0x7ff) as i32 - 1023;
        f64::powi(2.0, e - 10)
    };
    // a / ulp is exact: ulp is a power of two and a is far from the f64 subnormal range
    let r = (a / ulp).round_ties_even() * ulp;
    if r > FP16_MAX {
        return Err(Error::Fp16Overflow { value: x });
    }
    Ok(r.copysign(x))
}
