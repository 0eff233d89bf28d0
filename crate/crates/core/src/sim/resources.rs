use serde::{Deserialize, Serialize};

use super::hardware::HardwareConfig;
use crate::butterfly::MULTS_PER_BU;

/// Element width of every on-chip buffer, in bits.
pub const WORD_BITS: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BramBreakdown {
    pub bfly: usize,
    pub weight: usize,
    pub key: usize,
    pub query: usize,
    pub shortcut: usize,
}

impl BramBreakdown {
    pub fn total(&self) -> usize {
        self.bfly + self.weight + self.key + self.query + self.shortcut
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceReport {
    pub multipliers: usize,
    pub dsp_equivalent: f64,
    pub bram: BramBreakdown,
    pub bram_blocks: usize,
}

/// Blocks of `kbits` needed for a `depth x width_bits` buffer.
pub fn bram_for(depth: usize, width_bits: usize, kbits: usize) -> usize {
    (depth * width_bits).div_ceil(kbits * 1024)
}

/// Multipliers from the butterfly units plus the attention lanes; BRAM from
/// the per-engine butterfly and weight buffers plus the shared key, query
/// and shortcut buffers.
///
/// Per engine: two ping-pong banks of real/imaginary planes for data, and a
/// double-buffered weight store holding four coefficients per word.
pub fn resource_model(hw: &HardwareConfig) -> ResourceReport {
    let multipliers = hw.p_be * hw.p_bu * MULTS_PER_BU as usize + hw.p_head * (hw.p_qk + hw.p_sv);
    let depth = hw.buffer_depth;
    let k = hw.bram_kbits;
    let bfly = 2 * 2 * bram_for(depth, WORD_BITS, k);
    let weight = 2 * bram_for(depth, 4 * WORD_BITS, k);
    let attn = bram_for(depth, hw.attention_buffer_lanes * WORD_BITS, k);
    let bram = BramBreakdown {
        bfly: bfly * hw.p_be,
        weight: weight * hw.p_be,
        key: attn,
        query: attn,
        shortcut: 2 * bram_for(depth, 2 * WORD_BITS, k),
    };
    ResourceReport {
        multipliers,
        dsp_equivalent: multipliers as f64 * hw.dsp_per_mult,
        bram,
        bram_blocks: bram.total(),
    }
}

/// Device caps used by the explorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceBudget {
    pub name: String,
    pub dsp: f64,
    pub bram: usize,
}

impl DeviceBudget {
    pub fn vcu128() -> Self {
        DeviceBudget {
            name: "vcu128".into(),
            dsp: 9024.0,
            bram: 2016,
        }
    }

    pub fn fits(&self, r: &ResourceReport) -> bool {
        r.dsp_equivalent <= self.dsp && r.bram_blocks <= self.bram
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_counts() {
        assert_eq!(resource_model(&HardwareConfig::bp(40, 4)).multipliers, 640);
        assert_eq!(resource_model(&HardwareConfig::bp(120, 4)).multipliers, 1920);
        assert_eq!(resource_model(&HardwareConfig::bp(64, 4)).multipliers, 1024);
        let hw = HardwareConfig::bp(8, 8).with_attention(2, 16, 32);
        assert_eq!(resource_model(&hw).multipliers, 256 + 96);
    }

    #[test]
    fn bram_near_reported_designs() {
        // reported totals: 338 (BE-40) and 978 (BE-120)
        let be40 = resource_model(&HardwareConfig::bp(40, 4)).bram_blocks as f64;
        let be120 = resource_model(&HardwareConfig::bp(120, 4)).bram_blocks as f64;
        assert!((be40 / 338.0 - 1.0).abs() < 0.02, "{be40}");
        assert!((be120 / 978.0 - 1.0).abs() < 0.02, "{be120}");
        assert!(DeviceBudget::vcu128().fits(&resource_model(&HardwareConfig::bp(120, 4))));
    }
}
