//! Error type shared by every module.

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A dense object would exceed the amplitude cap.
    #[error("feasibility cap exceeded: {0}")]
    CapExceeded(String),
    /// Two objects built over different contexts were combined.
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    /// A register or label has the wrong width.
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    /// A state that must have unit norm does not.
    #[error("state is not normalised (norm {0})")]
    NotNormalised(f64),
    /// A matrix that must be unitary is not.
    #[error("matrix is not unitary")]
    NotUnitary,
    /// Generators do not define a valid (partial) stabiliser group.
    #[error("invalid stabiliser group: {0}")]
    InvalidGroup(String),
    /// No basis vector satisfies the closed-form support condition.
    #[error("no valid offset u for the closed-form stabiliser state")]
    NoValidU,
    /// A Weyl expectation fell inside the ambiguity band of the unsigned group.
    #[error("Weyl expectation {0} falls inside the tolerance ambiguity band")]
    ToleranceAmbiguity(f64),
    /// A reduced copy count was requested where no reduction exists.
    #[error("unsupported reduction: {0}")]
    UnsupportedReduction(String),
    /// The conjugation witness could not be recovered.
    #[error("conjugation witness not found (fidelity {0})")]
    WitnessNotFound(f64),
    /// The tolerant POVM tester has a non-positive gap.
    #[error("gamma_r = {0} is not positive")]
    GammaNonPositive(f64),
    /// The tolerant Bell tester has a non-positive gap.
    #[error("alpha = {0} is not positive")]
    AlphaNonPositive(f64),
    /// A parameter lies outside the range where the guarantee holds.
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    /// The matrix is not invertible modulo d.
    #[error("matrix is not invertible modulo {0}")]
    NonInvertible(i64),
    /// A probability table carries a significantly negative entry.
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    /// Malformed input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Result alias for this crate.
pub type Result<T> = std::result::Result<T, Error>;
