use serde::Serialize;

use super::attention::AttentionTiming;
use super::hardware::HardwareConfig;
use super::layer::{sim_stream, LayerCycles, Overlap, StreamSpec};
use crate::butterfly::Precision;
use crate::error::{Error, Result};
use crate::fabnet::FabNetConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Fft,
    Butterfly,
    Attention,
    PostProcess,
    /// Dense matrix multiply on the baseline MAC array.
    Dense,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Fft => "fft",
            LayerKind::Butterfly => "butterfly",
            LayerKind::Attention => "attention",
            LayerKind::PostProcess => "post_process",
            LayerKind::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerEntry {
    pub layer: String,
    pub kind: LayerKind,
    pub compute_cycles: u64,
    pub transfer_cycles: u64,
    pub exposed_cycles: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub clock_hz: f64,
    pub layers: Vec<LayerEntry>,
    pub total_cycles: u64,
    pub seconds: f64,
}

impl LatencyReport {
    pub fn new(clock_hz: f64) -> Self {
        LatencyReport {
            clock_hz,
            layers: Vec::new(),
            total_cycles: 0,
            seconds: 0.0,
        }
    }

    pub fn push(&mut self, layer: String, kind: LayerKind, c: LayerCycles) {
        self.layers.push(LayerEntry {
            layer,
            kind,
            compute_cycles: c.compute,
            transfer_cycles: c.transfer,
            exposed_cycles: c.exposed,
            seconds: c.exposed as f64 / self.clock_hz,
        });
        self.total_cycles += c.exposed;
        self.seconds = self.total_cycles as f64 / self.clock_hz;
    }

    pub fn compute_cycles(&self) -> u64 {
        self.layers.iter().map(|l| l.compute_cycles).sum()
    }
}

fn add(a: LayerCycles, b: LayerCycles) -> LayerCycles {
    LayerCycles {
        compute: a.compute + b.compute,
        transfer: a.transfer + b.transfer,
        exposed: a.exposed + b.exposed,
    }
}

/// Split a transform too long for the complex buffer into `n1 x n2` passes
/// (rows then columns, twiddles folded into the first pass), `n1 >= n2`.
fn split(n: usize) -> (usize, usize) {
    let bits = n.trailing_zeros();
    let n1 = 1usize << bits.div_ceil(2);
    (n1, n / n1)
}

/// `jobs` complex FFTs of length `n` moving `words_in`/`words_out` off-chip
/// words per job.
fn fft_layer(
    jobs: usize,
    n: usize,
    words_in: usize,
    words_out: usize,
    hw: &HardwareConfig,
    precision: Precision,
) -> Result<LayerCycles> {
    let spec = |jobs, n, words_in, words_out| StreamSpec {
        jobs,
        n,
        complex: true,
        words_in,
        words_out,
        weight_words: 0,
        overlap: Overlap::StoreLoadOnly,
    };
    if n <= hw.buffer_depth / 2 {
        return sim_stream(&spec(jobs, n, words_in, words_out), hw, precision);
    }
    let (n1, n2) = split(n);
    if n1 > hw.buffer_depth / 2 {
        return Err(Error::Capacity {
            dim: n,
            capacity: (hw.buffer_depth / 2).pow(2),
        });
    }
    let a = sim_stream(
        &spec(jobs * n2, n1, words_in.div_ceil(n2), 2 * n1),
        hw,
        precision,
    )?;
    let b = sim_stream(
        &spec(jobs * n1, n2, 2 * n2, words_out.div_ceil(n1)),
        hw,
        precision,
    )?;
    Ok(add(a, b))
}

fn butterfly_layer(
    jobs: usize,
    n: usize,
    width: usize,
    matrices: usize,
    hw: &HardwareConfig,
    precision: Precision,
) -> Result<LayerCycles> {
    let mut spec = StreamSpec::butterfly(jobs, n);
    spec.words_in = width;
    spec.words_out = width;
    spec.weight_words *= matrices;
    sim_stream(&spec, hw, precision)
}

/// Layer norm and shortcut add, streamed behind the producing layer; only the
/// first row in and the last row out are exposed.
pub fn post_process(rows: usize, d: usize, hw: &HardwareConfig) -> LayerCycles {
    let per_row = d.div_ceil(hw.p_post) as u64;
    let compute = rows as u64 * per_row;
    LayerCycles {
        compute,
        transfer: 0,
        exposed: compute.min(2 * per_row),
    }
}

/// End-to-end latency of `cfg` on `hw`. Every layer reads its input from and
/// writes its output to off-chip memory.
pub fn sim_network(cfg: &FabNetConfig, hw: &HardwareConfig, precision: Precision) -> Result<LatencyReport> {
    cfg.validate()?;
    hw.validate()?;
    if cfg.n_abfly > 0 && hw.p_head == 0 {
        return Err(Error::Config(format!(
            "{} ABfly blocks but no attention engines (p_head = 0)",
            cfg.n_abfly
        )));
    }
    let (seq, d) = (cfg.seq_len, cfg.d_hid);
    let (d_pad, seq_pad) = (cfg.d_pad()?, cfg.seq_pad()?);
    let wb = hw.word_bytes(precision) as u64;
    let mut report = LatencyReport::new(hw.clock_hz);
    let ffn = |report: &mut LatencyReport, tag: &str| -> Result<()> {
        let jobs = seq * cfg.r_ffn;
        let up = butterfly_layer(jobs, d_pad, d, cfg.r_ffn, hw, precision)?;
        report.push(format!("{tag}.ffn1"), LayerKind::Butterfly, up);
        let down = butterfly_layer(jobs, d_pad, d, cfg.r_ffn, hw, precision)?;
        report.push(format!("{tag}.ffn2"), LayerKind::Butterfly, down);
        report.push(format!("{tag}.post2"), LayerKind::PostProcess, post_process(seq, d, hw));
        Ok(())
    };
    for block in 0..cfg.n_total {
        if block < cfg.n_fbfly() {
            let tag = format!("fbfly{block}");
            let hid = fft_layer(seq, d_pad, d, 2 * d, hw, precision)?;
            report.push(format!("{tag}.fft_hidden"), LayerKind::Fft, hid);
            let sq = fft_layer(d, seq_pad, 2 * seq, seq, hw, precision)?;
            report.push(format!("{tag}.fft_seq"), LayerKind::Fft, sq);
            report.push(format!("{tag}.post1"), LayerKind::PostProcess, post_process(seq, d, hw));
            ffn(&mut report, &tag)?;
        } else {
            let tag = format!("abfly{block}");
            let mut proj = [0u64; 3];
            for (slot, name) in [(1, "k"), (2, "v"), (0, "q")] {
                let c = butterfly_layer(seq, d_pad, d, 1, hw, precision)?;
                proj[slot] = c.compute;
                report.push(format!("{tag}.proj_{name}"), LayerKind::Butterfly, c);
            }
            let at = AttentionTiming::for_layer(seq, cfg.n_heads, cfg.d_head(), hw, proj)?;
            let core = at.row_pipeline() - (at.t_q + at.t_k + at.t_v);
            let transfer = hw.transfer_cycles(4 * (seq * d) as u64 * wb);
            let last_row = hw.transfer_cycles(d as u64 * wb);
            let exposed = core.max(transfer - last_row) + last_row;
            report.push(
                format!("{tag}.attention"),
                LayerKind::Attention,
                LayerCycles {
                    compute: at.t_qk + at.t_sv,
                    transfer,
                    exposed,
                },
            );
            let o = butterfly_layer(seq, d_pad, d, 1, hw, precision)?;
            report.push(format!("{tag}.proj_o"), LayerKind::Butterfly, o);
            report.push(format!("{tag}.post1"), LayerKind::PostProcess, post_process(seq, d, hw));
            ffn(&mut report, &tag)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_abfly: usize) -> FabNetConfig {
        FabNetConfig {
            d_hid: 64,
            r_ffn: 2,
            n_total: 2,
            n_abfly,
            n_heads: 2,
            seq_len: 128,
            pad_policy: Default::default(),
        }
    }

    #[test]
    fn split_is_balanced() {
        assert_eq!(split(1024), (32, 32));
        assert_eq!(split(2048), (64, 32));
        assert_eq!(split(4096), (64, 64));
    }

    #[test]
    fn attention_needs_engines() {
        let hw = HardwareConfig::bp(8, 4);
        assert!(sim_network(&small(1), &hw, Precision::Fp16).is_err());
        assert!(sim_network(&small(0), &hw, Precision::Fp16).is_ok());
        let hw = hw.with_attention(1, 16, 16);
        let r = sim_network(&small(1), &hw, Precision::Fp16).unwrap();
        assert!(r.layers.iter().any(|l| l.kind == LayerKind::Attention));
    }

    #[test]
    fn totals_add_up() {
        let hw = HardwareConfig::bp(8, 4).with_bandwidth_gbps(Some(10.0));
        let r = sim_network(&small(0), &hw, Precision::Fp16).unwrap();
        assert_eq!(r.layers.len(), 2 * 6);
        assert_eq!(r.total_cycles, r.layers.iter().map(|l| l.exposed_cycles).sum::<u64>());
        for l in &r.layers {
            assert!(l.exposed_cycles <= l.compute_cycles + l.transfer_cycles, "{l:?}");
        }
    }
}
