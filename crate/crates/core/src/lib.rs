//! Butterfly-accelerator laboratory: butterfly/FFT kernels, the FABNet model,
//! the conflict-free memory layout, a cycle-level accelerator model and a
//! co-design explorer.

pub mod butterfly;
pub mod codesign;
pub mod error;
pub mod fabnet;
pub mod fp16;
pub mod layout;
pub mod par;
pub mod sim;

pub use error::{Error, Result};
