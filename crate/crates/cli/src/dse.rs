use std::path::PathBuf;

use anyhow::{bail, Context};
use bfly_core::codesign::{run_dse, AccuracyTable, Constraints, DseResult, SearchSpace};
use bfly_core::par;
use bfly_core::sim::DeviceBudget;
use clap::Args;

use crate::output::{emit, json_report, load, load_json, manifest_for, Csv};
use crate::{OutputArgs, Status};

pub const THREADS_ENV: &str = "BFLY_THREADS";

#[derive(Args)]
pub struct DseArgs {
    #[arg(long)]
    space: PathBuf,
    /// Accuracy table (JSON) with a baseline and per-config entries.
    #[arg(long)]
    accuracy: PathBuf,
    /// Device caps (JSON): name, dsp, bram.
    #[arg(long)]
    budget: PathBuf,
    /// Only `acc_loss=<fraction>` is understood.
    #[arg(long, default_value = "acc_loss=0.01")]
    constraint: String,
    /// Column of the accuracy table to constrain.
    #[arg(long, default_value = "avg")]
    dataset: String,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_constraint(s: &str) -> anyhow::Result<f64> {
    let Some(("acc_loss", v)) = s.split_once('=') else {
        bail!("constraint {s:?} is not of the form acc_loss=<fraction>");
    };
    let loss: f64 = v.trim().parse().with_context(|| format!("acc_loss value {v:?}"))?;
    if !(0.0..=1.0).contains(&loss) {
        bail!("acc_loss {loss} outside [0, 1]");
    }
    Ok(loss)
}

fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{THREADS_ENV}: {e}"),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV}={v:?} is not a positive integer"),
        },
    }
}

pub fn run(a: &DseArgs) -> anyhow::Result<Status> {
    let space = load(&a.space, SearchSpace::from_json)?;
    let table = load(&a.accuracy, AccuracyTable::from_json)?;
    let budget: DeviceBudget = load_json(&a.budget)?;
    let c = Constraints {
        dataset: a.dataset.clone(),
        max_accuracy_loss: parse_constraint(&a.constraint)?,
        budget,
    };
    let threads = threads_from_env()?;
    let (res, _) = par::with_threads(threads, || run_dse(&space, &table, &c))?;

    let manifest = manifest_for("dse", &a.output)
        .config("space", &a.space)
        .config("accuracy", &a.accuracy)
        .config("budget", &a.budget);
    let selected = res.selected.as_ref().map_or("none", |p| p.key.as_str());
    let text = match a.output.report {
        crate::ReportFormat::Json => json_report(&manifest, &res),
        crate::ReportFormat::Csv => front_csv(&manifest, &res, &c, selected),
    };
    emit(a.output.out.as_deref(), &text)?;
    eprintln!(
        "dse: {} points, {} fit the device, {} feasible, front {}, selected {selected}",
        res.evaluated,
        res.resource_feasible,
        res.feasible,
        res.front.len()
    );
    Ok(Status::Pass)
}

fn front_csv(manifest: &crate::manifest::RunManifest, res: &DseResult, c: &Constraints, selected: &str) -> String {
    let mut csv = Csv::new(
        manifest,
        &[
            "key",
            "d_hid",
            "r_ffn",
            "n_total",
            "n_abfly",
            "p_be",
            "p_bu",
            "p_qk",
            "p_sv",
            "accuracy",
            "latency_s",
            "multipliers",
            "bram",
        ],
    );
    csv.note(&format!(
        "dataset {} acc_loss {} budget {} (dsp {}, bram {})",
        c.dataset, c.max_accuracy_loss, c.budget.name, c.budget.dsp, c.budget.bram
    ));
    csv.note(&format!(
        "evaluated {} fit {} feasible {} selected {selected}",
        res.evaluated, res.resource_feasible, res.feasible
    ));
    for p in &res.front {
        let g = &p.grid;
        let (mults, bram) = p.resources.map_or((0, 0), |r| (r.multipliers, r.bram_blocks));
        csv.row(&[
            p.key.clone(),
            g.d_hid.to_string(),
            g.r_ffn.to_string(),
            g.n_total.to_string(),
            g.n_abfly.to_string(),
            g.p_be.to_string(),
            g.p_bu.to_string(),
            g.p_qk.to_string(),
            g.p_sv.to_string(),
            p.accuracy.to_string(),
            p.latency_s.map_or(String::new(), |l| l.to_string()),
            mults.to_string(),
            bram.to_string(),
        ]);
    }
    csv.finish()
}
