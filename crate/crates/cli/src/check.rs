use anyhow::Context;
use bfly_core::butterfly::{apply_butterfly, expand_dense, fft, ButterflyMatrix, ComplexVec};
use bfly_core::layout::{check_conflict_free, check_layout, BankLayout, ConflictReport, LayoutKind};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::output::{emit, json_report, manifest_for, Csv};
use crate::{OutputArgs, ReportFormat, Status};

fn pow2_at_least_2(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n >= 2 && n.is_power_of_two() {
        Ok(n)
    } else {
        Err(format!("{n} is not a power of two >= 2"))
    }
}

#[derive(Args)]
pub struct FftCheckArgs {
    /// Largest transform size; every power of two from 2 up is checked.
    #[arg(long, default_value = "4096", value_parser = pow2_at_least_2)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative L2 error allowed per case.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct Case {
    n: usize,
    suite: &'static str,
    rel_err: f64,
    pass: bool,
}

#[derive(Serialize)]
struct FftReport {
    tolerance: f64,
    cases: Vec<Case>,
    pass: bool,
}

/// Direct O(N^2) transform, twiddles taken from a table indexed mod N.
fn naive_dft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let table: Vec<(f64, f64)> = (0..n)
        .map(|e| {
            let t = -2.0 * std::f64::consts::PI * e as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let mut out = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let (mut sr, mut si) = (0.0, 0.0);
        for j in 0..n {
            let (c, s) = table[(j * k) % n];
            sr += re[j] * c - im[j] * s;
            si += re[j] * s + im[j] * c;
        }
        out.0[k] = sr;
        out.1[k] = si;
    }
    out
}

fn rel_l2(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got.iter().zip(want).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = want.iter().map(|b| b * b).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

fn fft_case(n: usize, r: &mut ChaCha8Rng) -> anyhow::Result<f64> {
    let re: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let im: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let y = fft(&ComplexVec::new(re.clone(), im.clone())?)?;
    let (wr, wi) = naive_dft(&re, &im);
    // interleave so one norm covers both planes
    let got: Vec<f64> = y.re.iter().zip(&y.im).flat_map(|(a, b)| [*a, *b]).collect();
    let want: Vec<f64> = wr.iter().zip(&wi).flat_map(|(a, b)| [*a, *b]).collect();
    Ok(rel_l2(&got, &want))
}

fn butterfly_case(n: usize, r: &mut ChaCha8Rng) -> anyhow::Result<f64> {
    let m = ButterflyMatrix::from_fn(n, |_, _| std::array::from_fn(|_| r.gen_range(-1.0..1.0)))?;
    let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let got = apply_butterfly(&m, &x)?;
    Ok(rel_l2(&got, &expand_dense(&m).matvec(&x)))
}

pub fn fft_check(a: &FftCheckArgs) -> anyhow::Result<Status> {
    let manifest = manifest_for("fft-check", &a.output).seed(a.seed);
    let mut r = ChaCha8Rng::seed_from_u64(a.seed);
    let mut cases = Vec::new();
    let mut n = 2;
    while n <= a.max_n {
        for suite in ["fft", "butterfly"] {
            let rel_err = match suite {
                "fft" => fft_case(n, &mut r),
                _ => butterfly_case(n, &mut r),
            }
            .with_context(|| format!("{suite} case n = {n}"))?;
            cases.push(Case {
                n,
                suite,
                rel_err,
                pass: rel_err <= a.tol,
            });
        }
        n *= 2;
    }
    let pass = cases.iter().all(|c| c.pass);
    let report = FftReport {
        tolerance: a.tol,
        cases,
        pass,
    };
    let text = match a.output.report {
        ReportFormat::Json => json_report(&manifest, &report),
        ReportFormat::Csv => {
            let mut csv = Csv::new(&manifest, &["n", "suite", "rel_err", "pass"]);
            csv.note(&format!("tolerance {:e}", a.tol));
            for c in &report.cases {
                csv.row(&[c.n.to_string(), c.suite.into(), format!("{:e}", c.rel_err), c.pass.to_string()]);
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    let failed = report.cases.iter().filter(|c| !c.pass).count();
    eprintln!("fft-check: {} cases, {failed} over tolerance", report.cases.len());
    Ok(if pass { Status::Pass } else { Status::VerifyFailed })
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    S2p,
    ColumnMajor,
    RowMajor,
}

#[derive(Args)]
pub struct LayoutArgs {
    /// Sweep every power-of-two size from 2 up to this.
    #[arg(long, default_value = "1024", value_parser = pow2_at_least_2)]
    max_n: usize,
    /// Check only this size.
    #[arg(long, value_parser = pow2_at_least_2)]
    n: Option<usize>,
    /// Check only this bank count (twice the butterfly units per engine).
    #[arg(long, value_parser = pow2_at_least_2)]
    banks: Option<usize>,
    /// Layout to check; the plain layouts serve as controls and never fail the run.
    #[arg(long, value_enum, default_value = "s2p")]
    layout: LayoutArg,
    #[command(flatten)]
    output: OutputArgs,
}

fn layout_report(kind: LayoutArg, n: usize, banks: usize) -> bfly_core::Result<ConflictReport> {
    match kind {
        LayoutArg::S2p => check_conflict_free(n, banks, banks / 2),
        LayoutArg::ColumnMajor => Ok(check_layout(&BankLayout::new(LayoutKind::ColumnMajor, n, banks)?)),
        LayoutArg::RowMajor => Ok(check_layout(&BankLayout::new(LayoutKind::RowMajor, n, banks)?)),
    }
}

#[derive(Serialize)]
struct LayoutSummary<'a> {
    total_conflicts: usize,
    reports: &'a [ConflictReport],
}

pub fn verify_layout(a: &LayoutArgs) -> anyhow::Result<Status> {
    let manifest: RunManifest = manifest_for("verify-layout", &a.output);
    let sizes: Vec<usize> = match a.n {
        Some(n) => vec![n],
        None => (1..=a.max_n.trailing_zeros()).map(|k| 1 << k).collect(),
    };
    let mut reports = Vec::new();
    for &n in &sizes {
        let banks: Vec<usize> = match a.banks {
            Some(b) if b > n => anyhow::bail!("{b} banks exceed the {n} elements"),
            Some(b) => vec![b],
            // more banks than elements leaves some banks empty: skipped
            None => (1..=n.trailing_zeros()).map(|k| 1 << k).collect(),
        };
        for b in banks {
            reports.push(layout_report(a.layout, n, b)?);
        }
    }
    let total: usize = reports.iter().map(ConflictReport::total).sum();
    let text = match a.output.report {
        ReportFormat::Json => json_report(
            &manifest,
            &LayoutSummary {
                total_conflicts: total,
                reports: &reports,
            },
        ),
        ReportFormat::Csv => {
            let mut csv = Csv::new(&manifest, &["n", "banks", "stage", "cycle", "conflicts"]);
            csv.note(&format!("layout {}, stages 0-indexed, total conflicts {total}", reports[0].kind.name()));
            for rep in &reports {
                for c in &rep.cycles {
                    csv.row(&[
                        rep.n.to_string(),
                        rep.n_banks.to_string(),
                        c.stage.to_string(),
                        c.cycle.to_string(),
                        c.conflicts.to_string(),
                    ]);
                }
            }
            csv.finish()
        }
    };
    emit(a.output.out.as_deref(), &text)?;
    eprintln!("verify-layout: {} configurations, {total} conflicts", reports.len());
    let failed = matches!(a.layout, LayoutArg::S2p) && total > 0;
    Ok(if failed { Status::VerifyFailed } else { Status::Pass })
}
