//! Closed-form FLOP and parameter counts. Multiply-add pairs count as two
//! FLOPs; layer norm, softmax, activations, biases and embeddings are left out
//! of every family alike.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::FabNetConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "fabnet")]
    FabNet,
    #[serde(rename = "transformer")]
    TransformerEncoder,
    #[serde(rename = "fnet")]
    FNet,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::FabNet => "fabnet",
            Family::TransformerEncoder => "transformer",
            Family::FNet => "fnet",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fabnet" => Ok(Family::FabNet),
            "transformer" | "bert" => Ok(Family::TransformerEncoder),
            "fnet" => Ok(Family::FNet),
            other => Err(crate::error::Error::Config(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsParams {
    pub flops: u64,
    /// Real multiplications contained in `flops`.
    pub mults: u64,
    pub params: u64,
}

impl Add for FlopsParams {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        FlopsParams {
            flops: self.flops + rhs.flops,
            mults: self.mults + rhs.mults,
            params: self.params + rhs.params,
        }
    }
}

impl AddAssign for FlopsParams {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for FlopsParams {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(FlopsParams::default(), Add::add)
    }
}

fn log2(n: usize) -> u64 {
    debug_assert!(n.is_power_of_two());
    n.trailing_zeros() as u64
}

/// One butterfly of (padded) size `n` applied to `rows` vectors.
pub fn butterfly_layer_ops(n: usize, rows: usize) -> FlopsParams {
    let pairs = (n as u64 / 2) * log2(n);
    FlopsParams {
        flops: 6 * pairs * rows as u64,
        mults: 4 * pairs * rows as u64,
        params: 4 * pairs,
    }
}

/// `transforms` complex FFTs of (padded) length `n`.
pub fn fft_ops(n: usize, transforms: usize) -> FlopsParams {
    let pairs = (n as u64 / 2) * log2(n);
    FlopsParams {
        flops: 10 * pairs * transforms as u64,
        mults: 4 * pairs * transforms as u64,
        params: 0,
    }
}

/// Dense `m x k` weight applied to `rows` vectors.
fn dense_ops(rows: usize, m: usize, k: usize) -> FlopsParams {
    let mk = (m * k) as u64;
    FlopsParams {
        flops: 2 * rows as u64 * mk,
        mults: rows as u64 * mk,
        params: mk,
    }
}

/// QK^T and S·V over all heads.
fn attention_ops(seq: usize, d: usize) -> FlopsParams {
    let macs = (seq * seq * d) as u64;
    FlopsParams {
        flops: 2 * 2 * macs,
        mults: 2 * macs,
        params: 0,
    }
}

fn fourier_ops(cfg: &FabNetConfig) -> Result<FlopsParams> {
    Ok(fft_ops(cfg.d_pad()?, cfg.seq_len) + fft_ops(cfg.seq_pad()?, cfg.d_hid))
}

fn butterfly_ffn_ops(cfg: &FabNetConfig) -> Result<FlopsParams> {
    let one = butterfly_layer_ops(cfg.d_pad()?, cfg.seq_len);
    Ok((0..2 * cfg.r_ffn).map(|_| one).sum())
}

fn dense_ffn_ops(cfg: &FabNetConfig) -> FlopsParams {
    let hidden = cfg.r_ffn * cfg.d_hid;
    dense_ops(cfg.seq_len, hidden, cfg.d_hid) + dense_ops(cfg.seq_len, cfg.d_hid, hidden)
}

pub fn fbfly_block_ops(cfg: &FabNetConfig) -> Result<FlopsParams> {
    Ok(fourier_ops(cfg)? + butterfly_ffn_ops(cfg)?)
}

pub fn abfly_block_ops(cfg: &FabNetConfig) -> Result<FlopsParams> {
    let proj = butterfly_layer_ops(cfg.d_pad()?, cfg.seq_len);
    Ok(proj + proj + proj + proj + attention_ops(cfg.seq_len, cfg.d_hid) + butterfly_ffn_ops(cfg)?)
}

/// Whole-encoder counts for `family` at `cfg`'s width, depth and length.
/// Transformer and FNet ignore `n_abfly`.
pub fn count_flops_params(cfg: &FabNetConfig, family: Family) -> Result<FlopsParams> {
    cfg.validate()?;
    let per_block = |ops: FlopsParams, n: usize| (0..n).map(|_| ops).sum::<FlopsParams>();
    Ok(match family {
        Family::FabNet => {
            per_block(fbfly_block_ops(cfg)?, cfg.n_fbfly())
                + per_block(abfly_block_ops(cfg)?, cfg.n_abfly)
        }
        Family::TransformerEncoder => {
            let d = cfg.d_hid;
            let proj = dense_ops(cfg.seq_len, d, d);
            let block = proj + proj + proj + proj + attention_ops(cfg.seq_len, d) + dense_ffn_ops(cfg);
            per_block(block, cfg.n_total)
        }
        Family::FNet => per_block(fourier_ops(cfg)? + dense_ffn_ops(cfg), cfg.n_total),
    })
}
