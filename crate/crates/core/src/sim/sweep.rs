use serde::Serialize;

use super::hardware::HardwareConfig;
use super::network::sim_network;
use crate::butterfly::Precision;
use crate::error::{Error, Result};
use crate::fabnet::FabNetConfig;
use crate::par;

/// Latency counts as saturated within this fraction of the unlimited case.
pub const SATURATION_TOLERANCE: f64 = 0.01;

pub const DEFAULT_GRID_GBPS: [f64; 6] = [6.0, 12.0, 25.0, 50.0, 100.0, 200.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub bandwidth_gbps: f64,
    pub cycles: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub unlimited_cycles: u64,
    /// Smallest swept bandwidth within tolerance of unlimited, if any.
    pub saturation_gbps: Option<f64>,
}

pub fn bandwidth_sweep(
    cfg: &FabNetConfig,
    hw: &HardwareConfig,
    bandwidths_gbps: &[f64],
    precision: Precision,
) -> Result<SweepResult> {
    if bandwidths_gbps.is_empty() {
        return Err(Error::Config("empty bandwidth list".into()));
    }
    if bandwidths_gbps.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::Config("bandwidths must be positive".into()));
    }
    if bandwidths_gbps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("bandwidths must be strictly increasing".into()));
    }
    let unlimited = sim_network(cfg, &hw.with_bandwidth_gbps(None), precision)?.total_cycles;
    let runs = par::map(bandwidths_gbps, |bw| {
        sim_network(cfg, &hw.with_bandwidth_gbps(Some(*bw)), precision).map(|r| SweepPoint {
            bandwidth_gbps: *bw,
            cycles: r.total_cycles,
            seconds: r.seconds,
        })
    });
    let points = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let limit = unlimited as f64 * (1.0 + SATURATION_TOLERANCE);
    let saturation_gbps = points
        .iter()
        .find(|p| p.cycles as f64 <= limit)
        .map(|p| p.bandwidth_gbps);
    Ok(SweepResult {
        points,
        unlimited_cycles: unlimited,
        saturation_gbps,
    })
}
