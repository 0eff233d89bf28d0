//! Cycle-level model of the butterfly accelerator (butterfly processor,
//! attention processor, post-processing), its resource model, and a MAC-array
//! baseline.

mod attention;
mod baseline;
mod hardware;
mod layer;
mod network;
mod resources;
mod sweep;

pub use attention::{sim_attention, AttentionTiming};
pub use baseline::{apportion, block_workloads, sim_baseline_mac, BaselineConfig, BaselineFamily, Workload};
pub use hardware::HardwareConfig;
pub use layer::{
    plan, sim_butterfly_layer, sim_fft_layer, sim_stream, BatchPlan, LayerCycles, Overlap, StreamSpec,
};
pub use network::{post_process, sim_network, LatencyReport, LayerEntry, LayerKind};
pub use resources::{bram_for, resource_model, BramBreakdown, DeviceBudget, ResourceReport, WORD_BITS};
pub use sweep::{bandwidth_sweep, SweepPoint, SweepResult, DEFAULT_GRID_GBPS, SATURATION_TOLERANCE};
