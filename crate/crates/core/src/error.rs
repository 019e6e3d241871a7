use thiserror::Error;

/// Failures reported by the toolkit. Numerical invariants that merely fail a
/// check are returned as report fields, not as errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("lattice mismatch: expected n = {expected}, found n = {found}")]
    LatticeMismatch { expected: usize, found: usize },
    #[error("cutoff k_max = {k_max} exceeds the Nyquist index {nyquist}")]
    CutoffExceedsNyquist { k_max: usize, nyquist: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("point is not on the grid: {0}")]
    OffGrid(String),
    #[error("kernel support exits the field's time range at t = {t}")]
    KernelOutsideDomain { t: f64 },
    #[error("symbol {0} has no change-of-base-point identity")]
    NoIdentity(String),
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("depth {depth} exceeds the cap {cap}")]
    DepthCap { depth: usize, cap: usize },
    #[error("time range violation: {0}")]
    TimeRange(String),
    #[error("non-finite solution at t = {t} (blow-up witness, sup before failure {last_sup})")]
    BlowUp { t: f64, last_sup: f64 },
    #[error("insufficient samples: {got} < {min}")]
    InsufficientSamples { got: usize, min: usize },
    #[error("invalid exponent regime: {0}")]
    InvalidRegime(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
