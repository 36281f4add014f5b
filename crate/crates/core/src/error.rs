use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cost guard: {0}")]
    CostGuard(String),
    #[error("non-finite value produced by layer {layer} ({name})")]
    NonFinite { layer: usize, name: String },
    #[error("non-finite gradient for parameter block {0}")]
    NonFiniteGradient(usize),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("backward already ran on this tape; call reset() first")]
    BackwardTwice,
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("spec fingerprint mismatch: file has {found:#018x}, model expects {expected:#018x}")]
    Fingerprint { expected: u64, found: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
