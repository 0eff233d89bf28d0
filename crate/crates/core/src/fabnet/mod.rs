//! FABNet: FBfly (Fourier mixing + butterfly FFN) and ABfly (attention with
//! butterfly projections) blocks, plus FLOP/parameter accounting.

mod counts;
mod forward;
mod io;

pub use counts::{
    abfly_block_ops, butterfly_layer_ops, count_flops_params, fbfly_block_ops, fft_ops, Family,
    FlopsParams,
};
pub use forward::{abfly_forward, fabnet_forward, fbfly_forward, fourier_mix};
pub use io::{BlockKind, BlockWeights, FfnWeights, LayerNorm, ProjectionWeights, WeightBundle};

use serde::{Deserialize, Serialize};

use crate::error::{is_pow2, Error, Result};

/// How non-power-of-two dimensions reach the butterfly/FFT paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadPolicy {
    /// Zero-pad to the next power of two, truncate outputs.
    #[default]
    ZeroPad,
    /// Reject non-power-of-two dimensions.
    Strict,
}

impl PadPolicy {
    pub fn padded(self, n: usize) -> Result<usize> {
        match self {
            PadPolicy::ZeroPad => Ok(n.next_power_of_two()),
            PadPolicy::Strict if is_pow2(n) => Ok(n),
            PadPolicy::Strict => Err(Error::NotPowerOfTwo(n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabNetConfig {
    pub d_hid: usize,
    pub r_ffn: usize,
    pub n_total: usize,
    pub n_abfly: usize,
    pub n_heads: usize,
    pub seq_len: usize,
    #[serde(default)]
    pub pad_policy: PadPolicy,
}

impl FabNetConfig {
    /// D_hid = 768, R_ffn = 4, 12 blocks, all FBfly.
    pub fn base(seq_len: usize) -> Self {
        FabNetConfig {
            d_hid: 768,
            r_ffn: 4,
            n_total: 12,
            n_abfly: 0,
            n_heads: 12,
            seq_len,
            pad_policy: PadPolicy::ZeroPad,
        }
    }

    /// D_hid = 1024, R_ffn = 4, 24 blocks, all FBfly.
    pub fn large(seq_len: usize) -> Self {
        FabNetConfig {
            d_hid: 1024,
            n_total: 24,
            n_heads: 16,
            ..Self::base(seq_len)
        }
    }

    pub fn n_fbfly(&self) -> usize {
        self.n_total - self.n_abfly
    }

    pub fn d_head(&self) -> usize {
        self.d_hid / self.n_heads
    }

    pub fn d_pad(&self) -> Result<usize> {
        self.pad_policy.padded(self.d_hid)
    }

    pub fn seq_pad(&self) -> Result<usize> {
        self.pad_policy.padded(self.seq_len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_hid == 0 || self.r_ffn == 0 || self.seq_len == 0 || self.n_heads == 0 {
            return Err(Error::Config(
                "d_hid, r_ffn, n_heads and seq_len must be positive".into(),
            ));
        }
        if self.n_abfly > self.n_total {
            return Err(Error::Config(format!(
                "n_abfly {} exceeds n_total {}",
                self.n_abfly, self.n_total
            )));
        }
        if !self.d_hid.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_hid {} not divisible by n_heads {}",
                self.d_hid, self.n_heads
            )));
        }
        self.d_pad()?;
        self.seq_pad()?;
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: FabNetConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Activations: `rows` tokens by `cols` features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "token matrix",
                value: *v,
            });
        }
        Ok(TokenMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        TokenMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        TokenMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn max_abs_diff(&self, other: &TokenMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn expect_shape(&self, rows: usize, cols: usize, what: &str) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::Shape(format!(
                "{what}: expected {rows}x{cols}, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

pub const LN_EPS: f64 = 1e-5;

/// Max-subtracted softmax.
pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Layer normalization over one row with learned scale and shift.
pub fn layernorm_row(row: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> Vec<f64> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    row.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(v, (g, b))| (v - mean) * inv * g + b)
        .collect()
}

/// tanh approximation of GELU, applied between the two FFN layers.
pub fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}
