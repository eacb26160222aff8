use thiserror::Error;

/// Errors raised by the numerics and the domain model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("Hermitian eigensolver did not converge for a {dim}x{dim} matrix")]
    ConvergenceFailure { dim: usize },

    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    DomainError { eigenvalue: f64 },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace {trace} is not 1")]
    TraceError { trace: f64 },

    #[error("POVM elements do not sum to the identity (max deviation {deviation:e})")]
    NotPovm { deviation: f64 },

    #[error("instrument is not trace preserving (max deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("Kraus map is not trace non-increasing (max eigenvalue of sum K^dag K is {max_eigenvalue})")]
    NotTraceNonIncreasing { max_eigenvalue: f64 },

    #[error("matrix is not column stochastic: {reason}")]
    NotStochastic { reason: String },

    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("outcome labels do not match: {reason}")]
    LabelMismatch { reason: String },

    #[error("a coarse-graining sequence needs at least one instrument")]
    EmptySequence,

    #[error("composed sequence has {count} branches, above the cap of {cap}")]
    BranchExplosion { count: usize, cap: usize },

    #[error("outcome {label} has zero volume")]
    ZeroVolumeOutcome { label: String },

    #[error("invalid mixing weights: {reason}")]
    WeightError { reason: String },

    #[error("input has weight {weight:e} outside the support of the reference image")]
    SupportLeak { weight: f64 },

    #[error("soft evidence on outcome {outcome} is incompatible with the model")]
    ModelFalsified { outcome: usize },

    #[error("POVM normalizer was singular after {attempts} attempts")]
    SingularNormalizer { attempts: usize },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
