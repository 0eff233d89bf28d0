use std::path::PathBuf;

use bfly_core::butterfly::Precision;
use bfly_core::fabnet::FabNetConfig;
use bfly_core::sim::{
    bandwidth_sweep, resource_model, sim_baseline_mac, sim_network, BaselineConfig, BaselineFamily, HardwareConfig,
    DEFAULT_GRID_GBPS,
};
use clap::Args;
use serde::Serialize;

use crate::flops::load_model;
use crate::manifest::RunManifest;
use crate::output::{emit, json_report, load, manifest_for, Csv};
use crate::{OutputArgs, PrecisionArg, ReportFormat, Status};

#[derive(Args)]
struct ModelHw {
    #[arg(long)]
    model: PathBuf,
    /// Accelerator config (JSON); unknown fields are rejected.
    #[arg(long)]
    hw: PathBuf,
    /// Overrides the model's sequence length.
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long, value_enum, default_value = "fp16")]
    precision: PrecisionArg,
}

impl ModelHw {
    fn load(&self) -> anyhow::Result<(FabNetConfig, HardwareConfig)> {
        Ok((load_model(&self.model, self.seq_len)?, load(&self.hw, HardwareConfig::from_json)?))
    }

    fn manifest(&self, sub: &'static str, out: &OutputArgs) -> RunManifest {
        manifest_for(sub, out).config("model", &self.model).config("hw", &self.hw)
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    inputs: ModelHw,
    /// Off-chip bandwidth in GB/s; overrides the hardware file.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<Status> {
    let (cfg, mut hw) = a.inputs.load()?;
    if let Some(bw) = a.bandwidth {
        anyhow::ensure!(bw.is_finite() && bw > 0.0, "bandwidth must be positive");
        hw = hw.with_bandwidth_gbps(Some(bw));
    }
    let report = sim_network(&cfg, &hw, a.inputs.precision.into())?;
    let manifest = a.inputs.manifest("simulate", &a.output);
    let text = match a.output.report {
        ReportFormat::Json => json_report(&manifest, &report),
        ReportFormat::Csv => {
            let mut csv = Csv::new(
                &manifest,
                &["layer", "kind", "compute_cycles", "transfer_cycles", "exposed_cycles", "seconds"],
            );
            csv.note(&format!("total_cycles {} seconds {}", report.total_cycles, report.seconds));
            for l in &report.layers {
                csv.row(&[
                    l.layer.clone(),
                    l.kind.name().into(),
                    l.compute_cycles.to_string(),
                    l.transfer_cycles.to_string(),
                    l.exposed_cycles.to_string(),
                    l.seconds.to_string(),
                ]);
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(Status::Pass)
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    inputs: ModelHw,
    /// Bandwidths in GB/s, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn sweep(a: &SweepArgs) -> anyhow::Result<Status> {
    let (cfg, hw) = a.inputs.load()?;
    let grid = if a.grid.is_empty() {
        DEFAULT_GRID_GBPS.to_vec()
    } else {
        a.grid.clone()
    };
    let res = bandwidth_sweep(&cfg, &hw, &grid, a.inputs.precision.into())?;
    let manifest = a.inputs.manifest("bandwidth-sweep", &a.output);
    let text = match a.output.report {
        ReportFormat::Json => json_report(&manifest, &res),
        ReportFormat::Csv => {
            let mut csv = Csv::new(&manifest, &["bandwidth_gbps", "cycles", "seconds", "slowdown"]);
            let sat = res.saturation_gbps.map_or("none".into(), |b| b.to_string());
            csv.note(&format!("unlimited_cycles {} saturation_gbps {sat}", res.unlimited_cycles));
            for p in &res.points {
                csv.row(&[
                    p.bandwidth_gbps.to_string(),
                    p.cycles.to_string(),
                    p.seconds.to_string(),
                    format!("{:.4}", p.cycles as f64 / res.unlimited_cycles as f64),
                ]);
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(Status::Pass)
}

#[derive(Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    inputs: ModelHw,
    /// Sequence lengths to compare; default is the model's own.
    #[arg(long = "seq", value_delimiter = ',')]
    seqs: Vec<usize>,
    /// Baseline multipliers; default matches the accelerator.
    #[arg(long)]
    multipliers: Option<usize>,
    #[arg(long, default_value_t = 32)]
    tree_width: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct CompareRow {
    seq_len: usize,
    bert_mac_s: f64,
    fabnet_mac_s: f64,
    fabnet_accel_s: f64,
    /// BERT over FABNet, both on the MAC array.
    model_speedup: f64,
    /// MAC array over the accelerator, both running FABNet.
    hw_speedup: f64,
    combined_speedup: f64,
}

#[derive(Serialize)]
struct CompareReport {
    multipliers: usize,
    rows: Vec<CompareRow>,
}

pub fn baseline_compare(a: &BaselineArgs) -> anyhow::Result<Status> {
    let (cfg, hw) = a.inputs.load()?;
    let precision: Precision = a.inputs.precision.into();
    let multipliers = a.multipliers.unwrap_or_else(|| resource_model(&hw).multipliers);
    let base = BaselineConfig {
        multipliers,
        tree_width: a.tree_width,
        clock_hz: hw.clock_hz,
    };
    let seqs = if a.seqs.is_empty() { vec![cfg.seq_len] } else { a.seqs.clone() };
    let mut rows = Vec::new();
    for seq_len in seqs {
        let c = FabNetConfig { seq_len, ..cfg };
        c.validate()?;
        let bert = sim_baseline_mac(&c, BaselineFamily::Bert, &base)?.seconds;
        let fab = sim_baseline_mac(&c, BaselineFamily::FabNet, &base)?.seconds;
        let accel = sim_network(&c, &hw, precision)?.seconds;
        rows.push(CompareRow {
            seq_len,
            bert_mac_s: bert,
            fabnet_mac_s: fab,
            fabnet_accel_s: accel,
            model_speedup: bert / fab,
            hw_speedup: fab / accel,
            combined_speedup: bert / accel,
        });
    }
    let manifest = a.inputs.manifest("baseline-compare", &a.output);
    let report = CompareReport { multipliers, rows };
    let text = match a.output.report {
        ReportFormat::Json => json_report(&manifest, &report),
        ReportFormat::Csv => {
            let mut csv = Csv::new(
                &manifest,
                &[
                    "seq_len",
                    "bert_mac_s",
                    "fabnet_mac_s",
                    "fabnet_accel_s",
                    "model_speedup",
                    "hw_speedup",
                    "combined_speedup",
                ],
            );
            csv.note(&format!("baseline multipliers {multipliers}, tree width {}", a.tree_width));
            for r in &report.rows {
                csv.row(&[
                    r.seq_len.to_string(),
                    r.bert_mac_s.to_string(),
                    r.fabnet_mac_s.to_string(),
                    r.fabnet_accel_s.to_string(),
                    format!("{:.3}", r.model_speedup),
                    format!("{:.3}", r.hw_speedup),
                    format!("{:.3}", r.combined_speedup),
                ]);
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(Status::Pass)
}
