use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Index arithmetic left the representable window (extreme levels or coordinates).
    #[error("cube arithmetic out of representable window: {0}")]
    OutOfWindow(String),

    /// A cube escaped the mesh domain and the function carries no tail descriptor there.
    #[error("cube not covered by mesh domain and no tail descriptor applies: {0}")]
    DomainCoverage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// The coarse end of the enumeration window still has averages above the
    /// threshold, so maximal cubes may be missed.
    #[error("window too small: coarse-level average {average} still exceeds threshold {threshold}")]
    WindowTooSmall { average: f64, threshold: f64 },

    #[error("sparsity certification failed for cube {cube}: {reason}")]
    CertificationFailure { cube: String, reason: String },

    #[error("cube {0} is not contained in any forest root")]
    NoParent(String),

    #[error("operation unsupported in dimension {0}")]
    UnsupportedDimension(u8),

    /// Numeric Legendre transform produced an associate violating the duality band.
    #[error("numeric conjugate failure: duality band violated by {worst_ratio:.3e} at t={at}")]
    NumericConjugateFailure { worst_ratio: f64, at: f64 },

    #[error("mesh layout mismatch: {0}")]
    MeshMismatch(String),

    #[error("uncertified sparse family rejected: {0}")]
    Uncertified(String),
}
