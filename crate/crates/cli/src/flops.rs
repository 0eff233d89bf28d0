use std::path::PathBuf;

use bfly_core::fabnet::{count_flops_params, FabNetConfig, Family};
use clap::Args;
use serde::Serialize;

use crate::output::{emit, json_report, load, manifest_for, Csv};
use crate::{OutputArgs, ReportFormat, Status};

#[derive(Args)]
pub struct FlopsArgs {
    /// FABNet config (JSON). Its shape is reused for the other families.
    #[arg(long)]
    model: PathBuf,
    /// fabnet, transformer or fnet; repeat for several. Default: all three.
    #[arg(long = "family")]
    families: Vec<String>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct Row {
    family: &'static str,
    flops: u64,
    params: u64,
    /// Transformer over this family; above 1 means this family is cheaper.
    flops_ratio: f64,
    params_ratio: f64,
}

#[derive(Serialize)]
struct FlopsReport {
    model: FabNetConfig,
    rows: Vec<Row>,
}

pub fn load_model(path: &std::path::Path, seq_len: Option<usize>) -> anyhow::Result<FabNetConfig> {
    let mut cfg = load(path, FabNetConfig::from_json)?;
    if let Some(s) = seq_len {
        cfg.seq_len = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

pub fn run(a: &FlopsArgs) -> anyhow::Result<Status> {
    let cfg = load_model(&a.model, a.seq_len)?;
    let families: Vec<Family> = if a.families.is_empty() {
        vec![Family::FabNet, Family::TransformerEncoder, Family::FNet]
    } else {
        a.families.iter().map(|f| f.parse()).collect::<Result<_, _>>()?
    };
    let reference = count_flops_params(&cfg, Family::TransformerEncoder)?;
    let rows = families
        .iter()
        .map(|&f| {
            let c = count_flops_params(&cfg, f)?;
            Ok(Row {
                family: f.name(),
                flops: c.flops,
                params: c.params,
                flops_ratio: reference.flops as f64 / c.flops as f64,
                params_ratio: reference.params as f64 / c.params as f64,
            })
        })
        .collect::<bfly_core::Result<Vec<_>>>()?;
    let manifest = manifest_for("flops", &a.output).config("model", &a.model);
    let report = FlopsReport { model: cfg, rows };
    let text = match a.output.report {
        ReportFormat::Json => json_report(&manifest, &report),
        ReportFormat::Csv => {
            let mut csv = Csv::new(&manifest, &["family", "flops", "params", "flops_ratio", "params_ratio"]);
            csv.note(&format!(
                "d_hid {} r_ffn {} n_total {} n_abfly {} seq_len {}",
                cfg.d_hid, cfg.r_ffn, cfg.n_total, cfg.n_abfly, cfg.seq_len
            ));
            for r in &report.rows {
                csv.row(&[
                    r.family.into(),
                    r.flops.to_string(),
                    r.params.to_string(),
                    format!("{:.4}", r.flops_ratio),
                    format!("{:.4}", r.params_ratio),
                ]);
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    Ok(Status::Pass)
}
