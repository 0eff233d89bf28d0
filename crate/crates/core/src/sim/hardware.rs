use serde::{Deserialize, Serialize};

use crate::butterfly::Precision;
use crate::error::{is_pow2, Error, Result};

fn default_clock() -> f64 {
    200e6
}
fn default_bytes_per_word() -> usize {
    2
}
fn default_depth() -> usize {
    1024
}
fn default_fill() -> u64 {
    8
}
fn default_post() -> usize {
    16
}
fn default_dsp_per_mult() -> f64 {
    1.0
}
fn default_bram_kbits() -> usize {
    36
}
fn default_lanes() -> usize {
    16
}

/// Accelerator parallelism and the model constants that go with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    pub p_be: usize,
    pub p_bu: usize,
    pub p_qk: usize,
    pub p_sv: usize,
    pub p_head: usize,
    #[serde(default = "default_clock")]
    pub clock_hz: f64,
    /// Off-chip bandwidth; `None` means unlimited.
    #[serde(default)]
    pub bandwidth_bytes_per_s: Option<f64>,
    #[serde(default = "default_bytes_per_word")]
    pub bytes_per_word: usize,
    /// Words per butterfly-engine buffer (real words; complex data gets half).
    #[serde(default = "default_depth")]
    pub buffer_depth: usize,
    /// Cycles added per stage of every batch.
    #[serde(default = "default_fill")]
    pub pipeline_fill: u64,
    /// Post-processing throughput in words per cycle.
    #[serde(default = "default_post")]
    pub p_post: usize,
    #[serde(default = "default_dsp_per_mult")]
    pub dsp_per_mult: f64,
    #[serde(default = "default_bram_kbits")]
    pub bram_kbits: usize,
    /// Words per row of the key/query buffers.
    #[serde(default = "default_lanes")]
    pub attention_buffer_lanes: usize,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            p_be: 1,
            p_bu: 1,
            p_qk: 0,
            p_sv: 0,
            p_head: 0,
            clock_hz: default_clock(),
            bandwidth_bytes_per_s: None,
            bytes_per_word: default_bytes_per_word(),
            buffer_depth: default_depth(),
            pipeline_fill: default_fill(),
            p_post: default_post(),
            dsp_per_mult: default_dsp_per_mult(),
            bram_kbits: default_bram_kbits(),
            attention_buffer_lanes: default_lanes(),
        }
    }
}

fn pow2_or_zero(v: usize) -> bool {
    v == 0 || is_pow2(v)
}

impl HardwareConfig {
    /// Butterfly processor only.
    pub fn bp(p_be: usize, p_bu: usize) -> Self {
        HardwareConfig {
            p_be,
            p_bu,
            ..Default::default()
        }
    }

    pub fn with_attention(mut self, p_head: usize, p_qk: usize, p_sv: usize) -> Self {
        self.p_head = p_head;
        self.p_qk = p_qk;
        self.p_sv = p_sv;
        self
    }

    pub fn with_bandwidth_gbps(mut self, gb_per_s: Option<f64>) -> Self {
        self.bandwidth_bytes_per_s = gb_per_s.map(|g| g * 1e9);
        self
    }

    pub fn validate(&self) -> Result<()> {
        // engine counts replicate whole units (BE-40, BE-120), so only the
        // lane widths inside a unit are held to powers of two
        for (name, v) in [("p_bu", self.p_bu), ("p_qk", self.p_qk), ("p_sv", self.p_sv)] {
            if !pow2_or_zero(v) {
                return Err(Error::Config(format!("{name} = {v} is neither 0 nor a power of two")));
            }
        }
        if self.p_be == 0 || self.p_bu == 0 {
            return Err(Error::Config("p_be and p_bu must be at least 1".into()));
        }
        let attn = [self.p_qk == 0, self.p_sv == 0, self.p_head == 0];
        if attn.iter().any(|z| *z) && !attn.iter().all(|z| *z) {
            return Err(Error::Config(format!(
                "p_qk ({}), p_sv ({}) and p_head ({}) must be zero together",
                self.p_qk, self.p_sv, self.p_head
            )));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::Config(format!("clock_hz {}", self.clock_hz)));
        }
        if let Some(bw) = self.bandwidth_bytes_per_s {
            if !(bw.is_finite() && bw > 0.0) {
                return Err(Error::Config(format!("bandwidth {bw} B/s")));
            }
        }
        if self.bytes_per_word == 0 || self.p_post == 0 || self.bram_kbits == 0 {
            return Err(Error::Config(
                "bytes_per_word, p_post and bram_kbits must be positive".into(),
            ));
        }
        if !is_pow2(self.buffer_depth) || self.buffer_depth < 2 {
            return Err(Error::Config(format!("buffer_depth {}", self.buffer_depth)));
        }
        if !(self.dsp_per_mult.is_finite() && self.dsp_per_mult > 0.0) {
            return Err(Error::Config(format!("dsp_per_mult {}", self.dsp_per_mult)));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let hw: HardwareConfig = serde_json::from_str(s)?;
        hw.validate()?;
        Ok(hw)
    }

    /// Bytes per word for the given arithmetic mode.
    pub fn word_bytes(&self, precision: Precision) -> usize {
        match precision {
            Precision::Fp16 => self.bytes_per_word,
            Precision::Fp64 => 8,
        }
    }

    /// Off-chip bytes per clock cycle, `None` when unlimited.
    pub fn bytes_per_cycle(&self) -> Option<f64> {
        self.bandwidth_bytes_per_s.map(|b| b / self.clock_hz)
    }

    pub fn transfer_cycles(&self, bytes: u64) -> u64 {
        match self.bytes_per_cycle() {
            None => 0,
            Some(bpc) => (bytes as f64 / bpc).ceil() as u64,
        }
    }

    /// `<p_be, p_bu, p_qk, p_sv>`.
    pub fn key(&self) -> (usize, usize, usize, usize) {
        (self.p_be, self.p_bu, self.p_qk, self.p_sv)
    }
}
