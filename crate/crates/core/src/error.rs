use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("dimension {dim} exceeds the configured cap of {cap}{hint}")]
    DimensionCap { dim: usize, cap: usize, hint: &'static str },

    #[error("operator is not Hermitian (max |H - H^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite (eigenvalue {eigenvalue:.6e})")]
    NotPositive { eigenvalue: f64 },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("POVM elements sum above identity by {excess:.3e}")]
    OverComplete { excess: f64 },

    #[error("missing signal state for outcome {0}")]
    MissingSignal(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("identity check `{name}` failed: deviation {deviation:.3e} > {threshold:.1e}")]
    IdentityViolated {
        name: &'static str,
        deviation: f64,
        threshold: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
