//! Butterfly-processor layer model.
//!
//! A layer is `jobs` independent length-`n` transforms. Each engine buffer
//! holds `cap / n` jobs (`cap` = buffer depth, halved for complex data), so a
//! batch is `p_be * cap / n` jobs. Batch `b` costs
//! `c_b = log2(n) * (ceil(ceil(jobs_b / p_be) * (n/2) / p_bu) + fill)` cycles
//! of compute, `l_b` cycles to load and `s_b` to store.
//!
//! Overlap, with `l_0` also carrying the weights:
//! * butterfly linear, separate ping-pong banks:
//!   `l_0 + sum_b max(c_b, s_{b-1}, l_{b+1}) + s_{B-1}`
//! * FFT, both banks pooled for complex data, so only the store of the
//!   previous batch overlaps the load of the next:
//!   `l_0 + sum_b max(c_b, s_{b-1} + l_{b+1}) + s_{B-1}`

use serde::Serialize;

use super::hardware::HardwareConfig;
use crate::butterfly::Precision;
use crate::error::{log2_exact, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overlap {
    /// Compute overlaps both the previous store and the next load.
    Full,
    /// Compute overlaps the previous store and next load taken together.
    StoreLoadOnly,
}

/// One streamed layer on the butterfly processor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    pub jobs: usize,
    /// Transform length (power of two).
    pub n: usize,
    pub complex: bool,
    /// Off-chip words read per job.
    pub words_in: usize,
    /// Off-chip words written per job.
    pub words_out: usize,
    /// Weight words loaded once, ahead of the first batch.
    pub weight_words: usize,
    pub overlap: Overlap,
}

impl StreamSpec {
    /// `rows` vectors through one butterfly matrix of size `n`.
    pub fn butterfly(rows: usize, n: usize) -> Self {
        let levels = n.trailing_zeros() as usize;
        StreamSpec {
            jobs: rows,
            n,
            complex: false,
            words_in: n,
            words_out: n,
            weight_words: 2 * n * levels,
            overlap: Overlap::Full,
        }
    }

    /// `rows` complex FFTs of length `n`.
    pub fn fft(rows: usize, n: usize) -> Self {
        StreamSpec {
            jobs: rows,
            n,
            complex: true,
            words_in: 2 * n,
            words_out: 2 * n,
            weight_words: 0,
            overlap: Overlap::StoreLoadOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LayerCycles {
    pub compute: u64,
    pub transfer: u64,
    pub exposed: u64,
}

/// Per-batch costs, exposed for replay checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub compute: Vec<u64>,
    pub load: Vec<u64>,
    pub store: Vec<u64>,
    pub overlap: Overlap,
}

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub fn plan(spec: &StreamSpec, hw: &HardwareConfig, precision: Precision) -> Result<BatchPlan> {
    if hw.p_be == 0 || hw.p_bu == 0 {
        return Err(Error::Config("butterfly processor needs p_be, p_bu >= 1".into()));
    }
    let levels = log2_exact(spec.n)? as u64;
    let cap = if spec.complex {
        hw.buffer_depth / 2
    } else {
        hw.buffer_depth
    };
    if spec.n > cap {
        return Err(Error::Capacity {
            dim: spec.n,
            capacity: cap,
        });
    }
    let per_batch = hw.p_be * (cap / spec.n);
    let batches = spec.jobs.div_ceil(per_batch).max(1);
    let wb = hw.word_bytes(precision) as u64;
    let mut out = BatchPlan {
        compute: Vec::with_capacity(batches),
        load: Vec::with_capacity(batches),
        store: Vec::with_capacity(batches),
        overlap: spec.overlap,
    };
    let half = (spec.n / 2).max(1) as u64;
    for b in 0..batches {
        let jobs_b = per_batch.min(spec.jobs - (b * per_batch).min(spec.jobs)) as u64;
        let per_engine = div_ceil(jobs_b, hw.p_be as u64);
        let stage = div_ceil(per_engine * half, hw.p_bu as u64) + hw.pipeline_fill;
        out.compute.push(if jobs_b == 0 { 0 } else { levels * stage });
        let mut in_words = jobs_b * spec.words_in as u64;
        if b == 0 {
            in_words += spec.weight_words as u64;
        }
        out.load.push(hw.transfer_cycles(in_words * wb));
        out.store
            .push(hw.transfer_cycles(jobs_b * spec.words_out as u64 * wb));
    }
    Ok(out)
}

impl BatchPlan {
    pub fn cycles(&self) -> LayerCycles {
        let nb = self.compute.len();
        let at = |v: &Vec<u64>, i: isize| -> u64 {
            if i < 0 || i as usize >= nb {
                0
            } else {
                v[i as usize]
            }
        };
        let mut exposed = self.load[0] + self.store[nb - 1];
        for b in 0..nb as isize {
            let c = at(&self.compute, b);
            let s = at(&self.store, b - 1);
            let l = at(&self.load, b + 1);
            exposed += match self.overlap {
                Overlap::Full => c.max(s).max(l),
                Overlap::StoreLoadOnly => c.max(s + l),
            };
        }
        LayerCycles {
            compute: self.compute.iter().sum(),
            transfer: self.load.iter().sum::<u64>() + self.store.iter().sum::<u64>(),
            exposed,
        }
    }
}

pub fn sim_stream(spec: &StreamSpec, hw: &HardwareConfig, precision: Precision) -> Result<LayerCycles> {
    Ok(plan(spec, hw, precision)?.cycles())
}

/// `rows` vectors through one butterfly linear layer of size `n`.
pub fn sim_butterfly_layer(rows: usize, n: usize, hw: &HardwareConfig) -> Result<LayerCycles> {
    sim_stream(&StreamSpec::butterfly(rows, n), hw, Precision::Fp16)
}

/// `rows` complex FFTs of length `n`.
pub fn sim_fft_layer(rows: usize, n: usize, hw: &HardwareConfig) -> Result<LayerCycles> {
    sim_stream(&StreamSpec::fft(rows, n), hw, Precision::Fp16)
}
