//! Butterfly factor matrices, the dual-mode butterfly unit, and a radix-2 FFT
//! built from the same unit.
//!
//! Stage convention: a butterfly of size `N` has `log2(N)` stages. Stage `s`
//! pairs indices `(i, i + N / 2^(s+1))` for every `i` whose stride bit is
//! clear, so the first executed stage pairs elements `N/2` apart. Within a
//! stage, pairs are listed by ascending low index.
//!
//! A pair with coefficients `(w1, w2, w3, w4)` maps `(in1, in2)` to
//! `(in1*w1 + in2*w3, in1*w2 + in2*w4)`. The dense form of a stage therefore
//! has `[w1, w3]` on the low row and `[w2, w4]` on the high row.

use std::ops::AddAssign;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, is_pow2, log2_exact, Error, Result};
use crate::fp16::quantize_fp16;

/// Real multipliers in one butterfly unit; both modes use all four.
pub const MULTS_PER_BU: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuMode {
    ButterflyLinear,
    Fft,
}

/// Arithmetic mode. `Fp16` rounds every butterfly-unit output to binary16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Fp64,
    Fp16,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp64" => Ok(Precision::Fp64),
            "fp16" => Ok(Precision::Fp16),
            other => Err(Error::Config(format!("unknown precision {other:?}"))),
        }
    }
}

/// Operation tally for one invocation. Returned by value, never global.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub bu_steps: u64,
    pub real_mults: u64,
    pub real_adds: u64,
}

impl OpCount {
    fn step(mode: BuMode) -> Self {
        let real_adds = match mode {
            BuMode::ButterflyLinear => 2,
            // two inside the complex multiply, four for the complex add/sub
            BuMode::Fft => 6,
        };
        OpCount {
            bu_steps: 1,
            real_mults: MULTS_PER_BU,
            real_adds,
        }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: Self) {
        self.bu_steps += rhs.bu_steps;
        self.real_mults += rhs.real_mults;
        self.real_adds += rhs.real_adds;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuOperands {
    Linear { in1: f64, in2: f64, w: [f64; 4] },
    Fft { in1: Complex64, in2: Complex64, twiddle: Complex64 },
}

impl BuOperands {
    pub fn mode(&self) -> BuMode {
        match self {
            BuOperands::Linear { .. } => BuMode::ButterflyLinear,
            BuOperands::Fft { .. } => BuMode::Fft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuOutputs {
    Linear(f64, f64),
    Fft(Complex64, Complex64),
}

fn round(x: f64, precision: Precision) -> Result<f64> {
    match precision {
        Precision::Fp64 => Ok(x),
        Precision::Fp16 => quantize_fp16(x),
    }
}

/// One butterfly-unit invocation.
///
/// `mode` is the control setting latched before the layer runs; operands of
/// the other kind are rejected. Both modes issue exactly four real multiplies.
pub fn bu_step(mode: BuMode, operands: BuOperands, precision: Precision) -> Result<BuOutputs> {
    if operands.mode() != mode {
        return Err(Error::ModeMismatch {
            configured: mode,
            requested: operands.mode(),
        });
    }
    match operands {
        BuOperands::Linear { in1, in2, w } => {
            ensure_finite("bu_step input", in1)?;
            ensure_finite("bu_step input", in2)?;
            for &c in &w {
                ensure_finite("bu_step coefficient", c)?;
            }
            let p1 = in1 * w[0];
            let p2 = in2 * w[2];
            let p3 = in1 * w[1];
            let p4 = in2 * w[3];
            Ok(BuOutputs::Linear(
                round(p1 + p2, precision)?,
                round(p3 + p4, precision)?,
            ))
        }
        BuOperands::Fft { in1, in2, twiddle } => {
            for v in [in1, in2, twiddle] {
                ensure_finite("bu_step input", v.re)?;
                ensure_finite("bu_step input", v.im)?;
            }
            // (a + bi)(c + di) on the four shared multipliers
            let ac = twiddle.re * in2.re;
            let bd = twiddle.im * in2.im;
            let ad = twiddle.re * in2.im;
            let bc = twiddle.im * in2.re;
            let t = Complex64::new(ac - bd, ad + bc);
            let o1 = in1 + t;
            let o2 = in1 - t;
            Ok(BuOutputs::Fft(
                Complex64::new(round(o1.re, precision)?, round(o1.im, precision)?),
                Complex64::new(round(o2.re, precision)?, round(o2.im, precision)?),
            ))
        }
    }
}

fn bu_linear(in1: f64, in2: f64, w: [f64; 4], precision: Precision) -> Result<(f64, f64)> {
    match bu_step(BuMode::ButterflyLinear, BuOperands::Linear { in1, in2, w }, precision)? {
        BuOutputs::Linear(a, b) => Ok((a, b)),
        BuOutputs::Fft(..) => unreachable!(),
    }
}

fn bu_fft(
    in1: Complex64,
    in2: Complex64,
    twiddle: Complex64,
    precision: Precision,
) -> Result<(Complex64, Complex64)> {
    match bu_step(BuMode::Fft, BuOperands::Fft { in1, in2, twiddle }, precision)? {
        BuOutputs::Fft(a, b) => Ok((a, b)),
        BuOutputs::Linear(..) => unreachable!(),
    }
}

/// Distance between paired elements at `level` for a butterfly of `size`.
pub fn stage_stride(size: usize, level: usize) -> usize {
    size >> (level + 1)
}

/// Indices of the `k`-th pair at a stage with the given stride.
pub fn pair_indices(stride: usize, k: usize) -> (usize, usize) {
    let low = (k / stride) * 2 * stride + k % stride;
    (low, low + stride)
}

/// One butterfly factor: `N/2` disjoint 2x2 blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ButterflyStage {
    pub level: usize,
    pub pairs: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawButterfly {
    size: usize,
    stages: Vec<ButterflyStage>,
}

/// Product of `log2(N)` butterfly factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawButterfly")]
pub struct ButterflyMatrix {
    size: usize,
    stages: Vec<ButterflyStage>,
}

impl TryFrom<RawButterfly> for ButterflyMatrix {
    type Error = Error;

    fn try_from(raw: RawButterfly) -> Result<Self> {
        ButterflyMatrix::new(raw.size, raw.stages)
    }
}

impl ButterflyMatrix {
    pub fn new(size: usize, stages: Vec<ButterflyStage>) -> Result<Self> {
        let levels = log2_exact(size)? as usize;
        if stages.len() != levels {
            return Err(Error::Structure(format!(
                "size {size} needs {levels} stages, got {}",
                stages.len()
            )));
        }
        for (s, stage) in stages.iter().enumerate() {
            if stage.level != s {
                return Err(Error::Structure(format!(
                    "stage {s} carries level {}",
                    stage.level
                )));
            }
            if stage.pairs.len() != size / 2 {
                return Err(Error::Structure(format!(
                    "stage {s} has {} pairs, expected {}",
                    stage.pairs.len(),
                    size / 2
                )));
            }
            for w in stage.pairs.iter().flatten() {
                ensure_finite("butterfly coefficient", *w)?;
            }
        }
        Ok(ButterflyMatrix { size, stages })
    }

    /// Build from a coefficient generator called as `f(level, pair)`.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> [f64; 4]) -> Result<Self> {
        let levels = log2_exact(size)? as usize;
        let stages = (0..levels)
            .map(|level| ButterflyStage {
                level,
                pairs: (0..size / 2).map(|k| f(level, k)).collect(),
            })
            .collect();
        Self::new(size, stages)
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::from_fn(size, |_, _| [1.0, 0.0, 0.0, 1.0])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn levels(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[ButterflyStage] {
        &self.stages
    }

    /// Trainable parameters: four per pair per stage, i.e. `2N log2 N`.
    pub fn param_count(&self) -> usize {
        4 * (self.size / 2) * self.levels()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("butterfly serializes")
    }
}

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix { n, data }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }
}

/// Dense `N x N` matrix of a single stage.
pub fn stage_dense(size: usize, stage: &ButterflyStage) -> DenseMatrix {
    let stride = stage_stride(size, stage.level);
    let mut data = vec![0.0; size * size];
    for (k, w) in stage.pairs.iter().enumerate() {
        let (lo, hi) = pair_indices(stride, k);
        data[lo * size + lo] = w[0];
        data[lo * size + hi] = w[2];
        data[hi * size + lo] = w[1];
        data[hi * size + hi] = w[3];
    }
    DenseMatrix { n: size, data }
}

/// Dense product `S_{L-1} ... S_1 S_0`, so that `expand_dense(m) x` equals
/// executing stage 0 first.
pub fn expand_dense(m: &ButterflyMatrix) -> DenseMatrix {
    let n = m.size;
    let mut acc = DenseMatrix::identity(n);
    let mut lo_row = vec![0.0; n];
    for stage in &m.stages {
        let stride = stage_stride(n, stage.level);
        for (k, w) in stage.pairs.iter().enumerate() {
            let (lo, hi) = pair_indices(stride, k);
            lo_row.copy_from_slice(&acc.data[lo * n..(lo + 1) * n]);
            for c in 0..n {
                let a = lo_row[c];
                let b = acc.data[hi * n + c];
                acc.data[lo * n + c] = w[0] * a + w[2] * b;
                acc.data[hi * n + c] = w[1] * a + w[3] * b;
            }
        }
    }
    acc
}

/// Stage-by-stage application through the butterfly unit.
pub fn apply_butterfly(m: &ButterflyMatrix, x: &[f64]) -> Result<Vec<f64>> {
    apply_butterfly_counted(m, x, Precision::Fp64).map(|(y, _)| y)
}

pub fn apply_butterfly_counted(
    m: &ButterflyMatrix,
    x: &[f64],
    precision: Precision,
) -> Result<(Vec<f64>, OpCount)> {
    if x.len() != m.size {
        return Err(Error::LengthMismatch {
            expected: m.size,
            actual: x.len(),
        });
    }
    let mut data = x.to_vec();
    let mut count = OpCount::default();
    for stage in &m.stages {
        let stride = stage_stride(m.size, stage.level);
        for (k, w) in stage.pairs.iter().enumerate() {
            let (lo, hi) = pair_indices(stride, k);
            let (a, b) = bu_linear(data[lo], data[hi], *w, precision)?;
            data[lo] = a;
            data[hi] = b;
            count += OpCount::step(BuMode::ButterflyLinear);
        }
    }
    Ok((data, count))
}

/// Complex vector stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::LengthMismatch {
                expected: re.len(),
                actual: im.len(),
            });
        }
        Ok(ComplexVec { re, im })
    }

    pub fn from_real(re: &[f64]) -> Self {
        ComplexVec {
            re: re.to_vec(),
            im: vec![0.0; re.len()],
        }
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVec {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, v: Complex64) {
        self.re[i] = v.re;
        self.im[i] = v.im;
    }

    pub fn iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.re.iter().zip(&self.im).map(|(r, i)| Complex64::new(*r, *i))
    }
}

impl FromIterator<Complex64> for ComplexVec {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut out = ComplexVec::default();
        for v in iter {
            out.re.push(v.re);
            out.im.push(v.im);
        }
        out
    }
}

/// `exp(-2*pi*i*k/n)`, exact at multiples of a quarter turn.
pub fn twiddle(n: usize, k: usize) -> Complex64 {
    let k = k % n;
    let quarter = (4 * k) / n;
    let rem = 4 * k - quarter * n;
    let base = if rem == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        let theta = -2.0 * std::f64::consts::PI * rem as f64 / (4 * n) as f64;
        let (s, c) = theta.sin_cos();
        Complex64::new(c, s)
    };
    // multiply by (-i)^quarter without rounding
    match quarter {
        0 => base,
        1 => Complex64::new(base.im, -base.re),
        2 => Complex64::new(-base.re, -base.im),
        _ => Complex64::new(-base.im, base.re),
    }
}

pub(crate) fn bit_reverse(v: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        v.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Twiddle used by the pair with low index `low` at `level`.
fn fft_stage_twiddle(n: usize, level: usize, low: usize) -> Complex64 {
    let stride = stage_stride(n, level);
    let group = low / (2 * stride);
    twiddle(n, bit_reverse(group, level as u32) * stride)
}

/// One recorded butterfly-unit invocation of an FFT run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuTrace {
    pub level: usize,
    pub low: usize,
    pub high: usize,
    pub twiddle: Complex64,
}

fn permute_bit_reversed(data: &ComplexVec, bits: u32) -> ComplexVec {
    (0..data.len())
        .map(|k| data.get(bit_reverse(k, bits)))
        .collect()
}

/// Forward DFT, `X[k] = sum_j x[j] exp(-2 pi i jk/N)`, unnormalized.
pub fn fft(x: &ComplexVec) -> Result<ComplexVec> {
    fft_with(x, Precision::Fp64, None).map(|(y, _)| y)
}

/// FFT returning the operation tally and, when `trace` is given, every
/// butterfly-unit invocation in execution order.
pub fn fft_with(
    x: &ComplexVec,
    precision: Precision,
    mut trace: Option<&mut Vec<BuTrace>>,
) -> Result<(ComplexVec, OpCount)> {
    let n = x.len();
    let levels = log2_exact(n)?;
    let mut data = x.clone();
    let mut count = OpCount::default();
    for level in 0..levels as usize {
        let stride = stage_stride(n, level);
        for k in 0..n / 2 {
            let (lo, hi) = pair_indices(stride, k);
            let tw = fft_stage_twiddle(n, level, lo);
            let (a, b) = bu_fft(data.get(lo), data.get(hi), tw, precision)?;
            data.set(lo, a);
            data.set(hi, b);
            count += OpCount::step(BuMode::Fft);
            if let Some(t) = trace.as_deref_mut() {
                t.push(BuTrace {
                    level,
                    low: lo,
                    high: hi,
                    twiddle: tw,
                });
            }
        }
    }
    Ok((permute_bit_reversed(&data, levels), count))
}

/// Inverse DFT with `1/N` normalization, via conjugation.
pub fn ifft(x: &ComplexVec) -> Result<ComplexVec> {
    let n = x.len() as f64;
    let conj = ComplexVec {
        re: x.re.clone(),
        im: x.im.iter().map(|v| -v).collect(),
    };
    let y = fft(&conj)?;
    Ok(ComplexVec {
        re: y.re.iter().map(|v| v / n).collect(),
        im: y.im.iter().map(|v| -v / n).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStage {
    pub level: usize,
    pub pairs: Vec<[Complex64; 4]>,
}

/// Butterfly with complex coefficients; the FFT is the instance whose
/// coefficients are `(1, 1, w, -w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexButterflyMatrix {
    pub size: usize,
    pub stages: Vec<ComplexStage>,
}

/// The FFT written as butterfly factors: identity blocks on the input side,
/// twiddles on the cross side. Output of the staged product is bit-reversed.
pub fn fft_as_butterfly(n: usize) -> Result<ComplexButterflyMatrix> {
    let levels = log2_exact(n)? as usize;
    let one = Complex64::new(1.0, 0.0);
    let stages = (0..levels)
        .map(|level| {
            let stride = stage_stride(n, level);
            ComplexStage {
                level,
                pairs: (0..n / 2)
                    .map(|k| {
                        let (lo, _) = pair_indices(stride, k);
                        let w = fft_stage_twiddle(n, level, lo);
                        [one, one, w, -w]
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(ComplexButterflyMatrix { size: n, stages })
}

/// Run an FFT-structured complex butterfly through the unit in FFT mode,
/// then restore natural order.
pub fn apply_fft_butterfly(
    m: &ComplexButterflyMatrix,
    x: &ComplexVec,
    precision: Precision,
    mut trace: Option<&mut Vec<BuTrace>>,
) -> Result<(ComplexVec, OpCount)> {
    if x.len() != m.size {
        return Err(Error::LengthMismatch {
            expected: m.size,
            actual: x.len(),
        });
    }
    if !is_pow2(m.size) {
        return Err(Error::NotPowerOfTwo(m.size));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut data = x.clone();
    let mut count = OpCount::default();
    for stage in &m.stages {
        let stride = stage_stride(m.size, stage.level);
        for (k, w) in stage.pairs.iter().enumerate() {
            if w[0] != one || w[1] != one || w[3] != -w[2] {
                return Err(Error::Structure(format!(
                    "stage {} pair {k} is not an FFT butterfly",
                    stage.level
                )));
            }
            let (lo, hi) = pair_indices(stride, k);
            let (a, b) = bu_fft(data.get(lo), data.get(hi), w[2], precision)?;
            data.set(lo, a);
            data.set(hi, b);
            count += OpCount::step(BuMode::Fft);
            if let Some(t) = trace.as_deref_mut() {
                t.push(BuTrace {
                    level: stage.level,
                    low: lo,
                    high: hi,
                    twiddle: w[2],
                });
            }
        }
    }
    Ok((permute_bit_reversed(&data, m.stages.len() as u32), count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_coefficients_pass_through() {
        let out = bu_step(
            BuMode::ButterflyLinear,
            BuOperands::Linear {
                in1: 1.0,
                in2: 2.0,
                w: [1.0, 0.0, 0.0, 1.0],
            },
            Precision::Fp64,
        )
        .unwrap();
        assert_eq!(out, BuOutputs::Linear(1.0, 2.0));
    }

    #[test]
    fn fft_mode_dc_pair() {
        let out = bu_step(
            BuMode::Fft,
            BuOperands::Fft {
                in1: c(1.0, 0.0),
                in2: c(1.0, 0.0),
                twiddle: c(1.0, 0.0),
            },
            Precision::Fp64,
        )
        .unwrap();
        assert_eq!(out, BuOutputs::Fft(c(2.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn rejects_non_finite_and_wrong_mode() {
        let bad = BuOperands::Linear {
            in1: f64::NAN,
            in2: 0.0,
            w: [1.0; 4],
        };
        assert!(matches!(
            bu_step(BuMode::ButterflyLinear, bad, Precision::Fp64),
            Err(Error::NonFinite { .. })
        ));
        let ok = BuOperands::Linear {
            in1: 1.0,
            in2: 0.0,
            w: [1.0; 4],
        };
        assert!(matches!(
            bu_step(BuMode::Fft, ok, Precision::Fp64),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn fp16_mode_rounds_outputs() {
        let out = bu_step(
            BuMode::ButterflyLinear,
            BuOperands::Linear {
                in1: 2048.0,
                in2: 1.0,
                w: [1.0, 0.0, 1.0, 0.0],
            },
            Precision::Fp16,
        )
        .unwrap();
        assert_eq!(out, BuOutputs::Linear(2048.0, 0.0));
    }

    #[test]
    fn two_point_dense_form() {
        let m = ButterflyMatrix::from_fn(2, |_, _| [1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = expand_dense(&m);
        assert_eq!(d.data, vec![1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn identity_expands_to_identity() {
        let m = ButterflyMatrix::identity(16).unwrap();
        assert_eq!(expand_dense(&m), DenseMatrix::identity(16));
        let x: Vec<f64> = (0..16).map(|i| i as f64 * 0.5 - 3.0).collect();
        assert_eq!(apply_butterfly(&m, &x).unwrap(), x);
    }

    #[test]
    fn length_and_structure_errors() {
        let m = ButterflyMatrix::identity(8).unwrap();
        assert!(matches!(
            apply_butterfly(&m, &[0.0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ButterflyMatrix::identity(12),
            Err(Error::NotPowerOfTwo(12))
        ));
        let bad = ButterflyMatrix::new(
            4,
            vec![ButterflyStage {
                level: 0,
                pairs: vec![[1.0, 0.0, 0.0, 1.0]; 2],
            }],
        );
        assert!(matches!(bad, Err(Error::Structure(_))));
        assert!(fft(&ComplexVec::zeros(6)).is_err());
    }

    #[test]
    fn fft_small_cases() {
        let y = fft(&ComplexVec::from_real(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(y.re, vec![1.0; 4]);
        assert_eq!(y.im, vec![0.0; 4]);
        let y = fft(&ComplexVec::from_real(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(y.re, vec![4.0, 0.0, 0.0, 0.0]);
        assert_eq!(y.im, vec![0.0; 4]);
        let y = fft(&ComplexVec::from_real(&[5.0])).unwrap();
        assert_eq!(y.re, vec![5.0]);
    }

    #[test]
    fn fft_butterfly_base_cases() {
        let m = fft_as_butterfly(2).unwrap();
        assert_eq!(m.stages.len(), 1);
        assert_eq!(m.stages[0].pairs[0], [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        let m4 = fft_as_butterfly(4).unwrap();
        let has_minus_i = m4
            .stages
            .iter()
            .flat_map(|s| s.pairs.iter())
            .any(|p| p[2] == c(0.0, -1.0));
        assert!(has_minus_i);
    }

    #[test]
    fn json_roundtrip_and_strictness() {
        let m = ButterflyMatrix::from_fn(4, |s, k| [s as f64, k as f64, 0.5, -1.0]).unwrap();
        let js = m.to_json();
        assert!(js.starts_with("{\"size\":4,\"stages\":[{\"level\":0,\"pairs\":[["));
        assert_eq!(ButterflyMatrix::from_json(&js).unwrap(), m);
        let extra = r#"{"size":2,"stages":[{"level":0,"pairs":[[1,0,0,1]]}],"x":1}"#;
        assert!(ButterflyMatrix::from_json(extra).is_err());
        let short = r#"{"size":4,"stages":[{"level":0,"pairs":[[1,0,0,1]]}]}"#;
        assert!(ButterflyMatrix::from_json(short).is_err());
    }

    #[test]
    fn twiddles_exact_on_quarter_turns() {
        assert_eq!(twiddle(4, 1), c(0.0, -1.0));
        assert_eq!(twiddle(8, 4), c(-1.0, 0.0));
        assert_eq!(twiddle(8, 6), c(0.0, 1.0));
        let w = twiddle(8, 1);
        assert!((w.re - 0.5f64.sqrt()).abs() < 1e-15 && (w.im + 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ifft_inverts() {
        let x = ComplexVec::new(vec![1.0, -2.0, 0.5, 3.0], vec![0.0, 1.0, -1.0, 0.25]).unwrap();
        let y = ifft(&fft(&x).unwrap()).unwrap();
        for i in 0..4 {
            assert!((y.get(i) - x.get(i)).norm() < 1e-14);
        }
    }
}
