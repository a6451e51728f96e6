use thiserror::Error;

/// Errors surfaced by the library.
///
/// Shape mismatches in graph primitives are programming errors and panic
/// instead (the panic message names the primitive and both shapes).
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular linear system at pivot {pivot_index}: |pivot| = {pivot_abs:.3e}, diagonal ratio max/min = {condition:.3e}")]
    SingularMatrix {
        pivot_index: usize,
        pivot_abs: f64,
        condition: f64,
    },

    #[error("backward requires a scalar (1x1) root, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },

    #[error("non-finite value in {context} (iteration {iteration})")]
    NonFinite { context: String, iteration: usize },

    #[error("non-finite gradient for parameter '{name}'")]
    NonFiniteGradient { name: String },

    #[error("invalid {what}: {reason}")]
    InvalidSpec { what: &'static str, reason: String },

    #[error("duplicate parameter name '{0}'")]
    DuplicateParamName(String),

    #[error("covariance not positive semidefinite: eigenvalue {eigenvalue:.3e} below tolerance")]
    NotPsd { eigenvalue: f64 },

    #[error("dimension mismatch: {context} ({lhs} vs {rhs})")]
    DimensionMismatch {
        context: &'static str,
        lhs: usize,
        rhs: usize,
    },

    #[error("IDX file {path}: expected magic {expected}, found {found}")]
    IdxMagic {
        path: String,
        expected: u32,
        found: u32,
    },

    #[error("IDX file {path}: truncated ({needed} bytes needed, {available} available)")]
    IdxTruncated {
        path: String,
        needed: usize,
        available: usize,
    },

    #[error("IDX image/label count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("checkpoint parse error at line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
