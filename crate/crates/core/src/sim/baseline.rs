//! Baseline accelerator: one MAC unit per layer, each an adder tree of
//! `tree_width` multipliers, with the multiplier budget split in proportion to
//! each layer's work. Layers of a block form a row-level pipeline, so a block
//! costs its slowest layer plus one row of every other layer; blocks run back
//! to back. No off-chip traffic is modeled; this is used for speedup ratios.
//!
//! A dot product of length `k` occupies `ceil(k / T) * T` multiplier slots.
//! Fourier layers run as dense DFT matmuls and butterfly layers as
//! length-2 dot products, each padded to a full tree.

use serde::{Deserialize, Serialize};

use super::layer::LayerCycles;
use super::network::{LatencyReport, LayerKind};
use crate::error::{Error, Result};
use crate::fabnet::FabNetConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineFamily {
    /// Dense Transformer encoder.
    Bert,
    /// FABNet with the Fourier layers as DFT matmuls.
    FabNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub multipliers: usize,
    #[serde(default = "default_tree")]
    pub tree_width: usize,
    #[serde(default = "default_clock")]
    pub clock_hz: f64,
}

fn default_tree() -> usize {
    32
}
fn default_clock() -> f64 {
    200e6
}

impl BaselineConfig {
    pub fn new(multipliers: usize) -> Self {
        BaselineConfig {
            multipliers,
            tree_width: default_tree(),
            clock_hz: default_clock(),
        }
    }
}

/// Multiplier-slot demand of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub name: String,
    pub kind: LayerKind,
    pub slots: u64,
}

fn dots(count: u64, len: u64, t: u64) -> u64 {
    count * len.div_ceil(t) * t
}

/// Per-block workloads of `cfg` under `family`.
pub fn block_workloads(cfg: &FabNetConfig, family: BaselineFamily, abfly: bool, t: usize) -> Result<Vec<Workload>> {
    let t = t as u64;
    let seq = cfg.seq_len as u64;
    let d = cfg.d_hid as u64;
    let hid = cfg.r_ffn as u64 * d;
    let heads = cfg.n_heads as u64;
    let dh = cfg.d_head() as u64;
    let w = |name: &str, kind, slots| Workload {
        name: name.to_string(),
        kind,
        slots,
    };
    let attention = |out: &mut Vec<Workload>| {
        out.push(w("qk", LayerKind::Attention, heads * dots(seq * seq, dh, t)));
        out.push(w("sv", LayerKind::Attention, heads * dots(seq * dh, seq, t)));
    };
    let mut out = Vec::new();
    match family {
        BaselineFamily::Bert => {
            for name in ["q", "k", "v"] {
                out.push(w(name, LayerKind::Dense, dots(seq * d, d, t)));
            }
            attention(&mut out);
            out.push(w("o", LayerKind::Dense, dots(seq * d, d, t)));
            out.push(w("ffn1", LayerKind::Dense, dots(seq * hid, d, t)));
            out.push(w("ffn2", LayerKind::Dense, dots(seq * d, hid, t)));
        }
        BaselineFamily::FabNet => {
            let n = cfg.d_pad()? as u64;
            let levels = n.trailing_zeros() as u64;
            // each butterfly output is a length-2 dot product
            let bfly = seq * n * levels * dots(1, 2, t);
            if abfly {
                for name in ["q", "k", "v"] {
                    out.push(w(name, LayerKind::Butterfly, bfly));
                }
                attention(&mut out);
                out.push(w("o", LayerKind::Butterfly, bfly));
            } else {
                // real input times the complex DFT matrix
                out.push(w("dft_hidden", LayerKind::Dense, 2 * dots(seq * d, d, t)));
                // complex input, real part kept
                out.push(w("dft_seq", LayerKind::Dense, dots(seq * d, 2 * seq, t)));
            }
            out.push(w("ffn1", LayerKind::Butterfly, cfg.r_ffn as u64 * bfly));
            out.push(w("ffn2", LayerKind::Butterfly, cfg.r_ffn as u64 * bfly));
        }
    }
    Ok(out)
}

/// Split `total` multipliers in proportion to `weights`, at least one each,
/// largest remainders first (ties to the earlier layer).
pub fn apportion(weights: &[u64], total: usize) -> Result<Vec<usize>> {
    let k = weights.len();
    if total < k {
        return Err(Error::Config(format!("{total} multipliers for {k} layers")));
    }
    let spare = (total - k) as u128;
    let sum: u128 = weights.iter().map(|w| *w as u128).sum();
    if sum == 0 {
        return Ok(vec![total / k; k]);
    }
    let mut share: Vec<usize> = Vec::with_capacity(k);
    let mut rem: Vec<(u128, usize)> = Vec::with_capacity(k);
    for (i, w) in weights.iter().enumerate() {
        let exact = spare * *w as u128;
        share.push(1 + (exact / sum) as usize);
        rem.push((exact % sum, i));
    }
    let left = total - share.iter().sum::<usize>();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rem.iter().take(left) {
        share[i] += 1;
    }
    Ok(share)
}

pub fn sim_baseline_mac(cfg: &FabNetConfig, family: BaselineFamily, base: &BaselineConfig) -> Result<LatencyReport> {
    cfg.validate()?;
    if base.tree_width == 0 {
        return Err(Error::Config("tree_width must be positive".into()));
    }
    let mut report = LatencyReport::new(base.clock_hz);
    let seq = cfg.seq_len as u64;
    for block in 0..cfg.n_total {
        let abfly = match family {
            BaselineFamily::Bert => true,
            BaselineFamily::FabNet => block >= cfg.n_fbfly(),
        };
        let work = block_workloads(cfg, family, abfly, base.tree_width)?;
        let slots: Vec<u64> = work.iter().map(|w| w.slots).collect();
        let mults = apportion(&slots, base.multipliers)?;
        let times: Vec<u64> = slots
            .iter()
            .zip(&mults)
            .map(|(s, m)| s.div_ceil(*m as u64))
            .collect();
        // the first slowest layer carries the block; the others add one row
        let slowest = (0..times.len()).fold(0, |best, i| if times[i] > times[best] { i } else { best });
        for (i, w) in work.iter().enumerate() {
            let exposed = if i == slowest {
                times[i]
            } else {
                times[i].div_ceil(seq)
            };
            report.push(
                format!("block{block}.{}", w.name),
                w.kind,
                LayerCycles {
                    compute: times[i],
                    transfer: 0,
                    exposed,
                },
            );
        }
    }
    Ok(report)
}
