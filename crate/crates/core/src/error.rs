use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("binary16 overflow: {value} rounds to {}", if *.value < 0.0 { "-inf" } else { "+inf" })]
    Fp16Overflow { value: f64 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("bu_step mode mismatch: unit configured for {configured:?}, operands for {requested:?}")]
    ModeMismatch {
        configured: crate::butterfly::BuMode,
        requested: crate::butterfly::BuMode,
    },

    #[error("invalid butterfly structure: {0}")]
    Structure(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("layer dimension {dim} exceeds buffer capacity {capacity}")]
    Capacity { dim: usize, capacity: usize },

    #[error("no accuracy entry for dataset {dataset:?}, config {key}")]
    MissingAccuracy { dataset: String, key: String },

    #[error("no feasible design")]
    NoFeasibleDesign,

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(context: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { context, value })
    }
}

pub(crate) fn is_pow2(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub(crate) fn log2_exact(n: usize) -> Result<u32> {
    if is_pow2(n) {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::NotPowerOfTwo(n))
    }
}
