use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("entry count {len} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("not a row contraction: ||sum T_i T_i*|| = {row_norm:.12}")]
    NotRowContraction { row_norm: f64 },

    #[error("commutator violation: ||T_{i}T_{j} - T_{j}T_{i}|| = {norm:.3e}")]
    CommutatorViolation { i: usize, j: usize, norm: f64 },

    #[error("tuple has no defect (first defect index is 0)")]
    NoDefect,

    #[error("subspace is not co-invariant (residual {residual:.3e})")]
    NotCoinvariant { residual: f64 },

    #[error("horizon {horizon} exceeds certified depth {certified}")]
    BeyondCertifiedDepth { horizon: usize, certified: usize },

    #[error("first defect index is not stable under truncation growth ({at_n} at N, {at_n_plus_2} at N+2)")]
    UnstableDefect { at_n: usize, at_n_plus_2: usize },

    #[error("monomial weights disagree with the kernel expansion (max error {residual:.3e})")]
    WeightGate { residual: f64 },

    #[error("zero {re}+{im}i is not inside the unit disc")]
    ZeroOutsideDisc { re: f64, im: f64 },

    #[error("invalid tolerance {name} = {value}")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
