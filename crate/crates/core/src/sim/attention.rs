//! Attention-processor timing. Q·K^T produces S one row at a time, so S·V can
//! start on the first rows instead of waiting for all of S; likewise QK can
//! consume Q rows as the projection emits them (K and V are projected first).

use serde::Serialize;

use super::hardware::HardwareConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttentionTiming {
    /// Query rows.
    pub m: u64,
    /// Key rows.
    pub l: u64,
    pub t_qk: u64,
    pub t_sv: u64,
    pub t_q: u64,
    pub t_k: u64,
    pub t_v: u64,
}

impl AttentionTiming {
    /// QK and SV cycles for `seq` tokens on `hw`'s attention engines.
    /// Heads are spread over `p_head` engines; each engine streams
    /// `seq * seq * d_head` multiply-accumulates through `p_qk` (resp. `p_sv`)
    /// lanes.
    pub fn for_layer(
        seq: usize,
        n_heads: usize,
        d_head: usize,
        hw: &HardwareConfig,
        projections: [u64; 3],
    ) -> Result<Self> {
        if hw.p_head == 0 || hw.p_qk == 0 || hw.p_sv == 0 {
            return Err(Error::Config(
                "attention layers need p_head, p_qk and p_sv >= 1".into(),
            ));
        }
        let rounds = n_heads.div_ceil(hw.p_head) as u64;
        let macs = (seq * seq * d_head) as u64;
        Ok(AttentionTiming {
            m: seq as u64,
            l: seq as u64,
            t_qk: rounds * macs.div_ceil(hw.p_qk as u64),
            t_sv: rounds * macs.div_ceil(hw.p_sv as u64),
            t_q: projections[0],
            t_k: projections[1],
            t_v: projections[2],
        })
    }

    pub fn naive(&self) -> u64 {
        self.t_q + self.t_k + self.t_v + self.t_qk + self.t_sv
    }

    /// `ceil((M-1)/M * T(QK) + (L-1)/L * T(SV))`, exact in integers.
    pub fn reduction(&self) -> u64 {
        let (m, l) = (self.m as u128, self.l as u128);
        let num = (m - 1) * l * self.t_qk as u128 + (l - 1) * m * self.t_sv as u128;
        num.div_ceil(m * l) as u64
    }

    /// Q projection, QK and SV as a three-stage row pipeline over the `m`
    /// query rows: one row through every stage, then `m - 1` rows at the pace
    /// of the slowest stage. When the Q projection is the slowest stage and
    /// `l == m` this is `naive() - reduction()` up to one cycle of rounding;
    /// otherwise it is larger, since no stage finishes before its own total.
    pub fn row_pipeline(&self) -> u64 {
        let m = self.m as u128;
        let stages = [self.t_q as u128, self.t_qk as u128, self.t_sv as u128];
        let slowest = *stages.iter().max().unwrap();
        let num = stages.iter().sum::<u128>() + (m - 1) * slowest;
        self.t_k + self.t_v + num.div_ceil(m) as u64
    }
}

pub fn sim_attention(at: &AttentionTiming, pipelined: bool) -> u64 {
    assert!(at.m >= 1 && at.l >= 1, "attention needs at least one row");
    if pipelined {
        at.naive() - at.reduction()
    } else {
        at.naive()
    }
}
