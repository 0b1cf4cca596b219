//! Error type shared by the whole crate.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by model construction, depth bookkeeping, and the
/// numerical verifiers.
///
/// Depth violations are always hard errors: no operation silently truncates
/// or extrapolates past the configured cylinder budget.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A requested depth exceeds the model's cylinder budget.
    #[error("depth {requested} exceeds the cylinder budget {budget}")]
    DepthOverflow {
        /// Depth that was asked for.
        requested: usize,
        /// Budget the model was built with.
        budget: usize,
    },

    /// A depth argument is outside the valid range for the operation.
    #[error("depth {depth} out of range for {operation} (valid: {valid})")]
    DepthRange {
        /// Offending depth.
        depth: usize,
        /// Operation that rejected it.
        operation: &'static str,
        /// Human-readable description of the valid range.
        valid: String,
    },

    /// The shift model itself is malformed.
    #[error("invalid shift model: {0}")]
    InvalidModel(String),

    /// The measure parameters are malformed or inconsistent with the model.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Two objects built over different models or depths were combined.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A certificate or bank built for one measure was used with another.
    #[error("object certified for measure {expected:#x} used with measure {found:#x}")]
    MeasureMismatch {
        /// Fingerprint the object was certified against.
        expected: u64,
        /// Fingerprint of the measure actually supplied.
        found: u64,
    },

    /// A weight function failed Markovian certification.
    #[error("not Markovian: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotMarkovian {
        /// Largest deviation of the fiber averages from one.
        deviation: f64,
        /// Tolerance the certificate was requested at.
        tolerance: f64,
    },

    /// A function that must be nonnegative (or strictly positive) is not.
    #[error("{context}: value {value:.3e} at word {word}")]
    NotPositive {
        /// Which requirement was violated.
        context: &'static str,
        /// Offending value (real part).
        value: f64,
        /// Word at which it occurs.
        word: String,
    },

    /// A loop-group element is not unitary at some word.
    #[error("loop element not unitary: deviation {deviation:.3e} at word {word}")]
    NotUnitary {
        /// Largest deviation of `G*G` from the identity.
        deviation: f64,
        /// Word at which it occurs.
        word: String,
    },

    /// An operation requires a shift-invariant measure.
    #[error("measure is not shift-invariant (max |rho - 1| = {deviation:.3e}): {operation}")]
    NotInvariant {
        /// Deviation of the backward derivative from one.
        deviation: f64,
        /// Operation that requires invariance.
        operation: &'static str,
    },

    /// An operation requires a function that factors through the shift,
    /// i.e. one that takes the same value on every one-letter extension.
    #[error(
        "function does not factor through the shift: fiber spread {deviation:.3e} exceeds {tolerance:.3e}"
    )]
    NotShiftMeasurable {
        /// Largest spread of values over a preimage fiber.
        deviation: f64,
        /// Tolerance the check was requested at.
        tolerance: f64,
    },

    /// An operation requires every point to have the same number of
    /// one-step preimages.
    #[error("fiber cardinality varies over the state space: {0}")]
    VariableFiberCardinality(String),

    /// A filter bank was used where a verified one is required.
    #[error("filter bank has no passing membership report: {0}")]
    BankUnverified(String),

    /// An operation defined for unweighted banks received a weighted one.
    #[error("operation requires an unweighted filter bank: {0}")]
    WeightedBank(String),

    /// A derived object failed a construction postcondition.
    #[error("postcondition failed: {0}")]
    Postcondition(String),

    /// Scenario or serialization input is malformed.
    #[error("config error: {0}")]
    Config(String),
}
