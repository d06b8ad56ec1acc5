//! Crate-wide error type. Every fallible operation returns [`Result`]; the
//! variants are grouped by the layer that raises them.

/// Unified error for source construction, channel evaluation, decoy-state
/// bounds, and the optimizer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    // --- source / distribution construction ---
    /// Mean photon number must be non-negative.
    #[error("mean photon number must be non-negative, got {0}")]
    NegativeMean(f64),
    /// A probability fell outside [0, 1].
    #[error("probability P_{index} = {value} is outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },
    /// The probabilities do not sum close enough to 1.
    #[error("probabilities sum to {sum}, outside [1 - 1e-9, 1 + 1e-12]")]
    NotNormalized { sum: f64 },
    /// An explicitly requested truncation leaves too much probability mass
    /// beyond the last retained component.
    #[error("truncation at N = {trunc} leaves tail mass {tail_mass:.3e} > 1e-9")]
    TruncationTail { trunc: usize, tail_mass: f64 },
    /// Automatic truncation hit its cap with the tail still too heavy.
    #[error("distribution did not converge: tail mass {tail_mass:.3e} at the truncation cap")]
    TruncationFailure { tail_mass: f64 },
    /// Zero squeezing: the modified-source formulas degenerate (c is
    /// undefined); use a plain coherent source instead.
    #[error("zero squeeze parameter: source degenerates to a coherent state")]
    DegenerateSource,
    /// A scalar parameter violated its documented range.
    #[error("parameter {name} = {value} violates constraint: {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    /// Bisection target is outside the range the source family can reach.
    #[error("target mean {target} cannot be bracketed on the search interval")]
    NoBracket { target: f64 },
    /// The Fock-space oracle's basis is too small for the requested state.
    #[error("Fock dimension {dim} too small: residual mass {tail_mass:.3e}")]
    DimTooSmall { dim: usize, tail_mass: f64 },

    // --- channel ---
    /// Fiber length must be non-negative.
    #[error("fiber length must be non-negative, got {0} km")]
    NegativeLength(f64),
    /// Total gain came out non-positive, so a QBER cannot be formed.
    #[error("channel gain is not positive; QBER undefined")]
    ZeroGain,

    // --- decoy-state bounds ---
    /// No multi-photon component exceeds the numeric threshold, so there is
    /// no usable reference index for the linear-combination bound.
    #[error("signal distribution has no usable multi-photon component")]
    NoMultiphoton,
    /// The bound's denominator is non-positive: the decoy/signal pair is
    /// degenerate or ordered the wrong way round.
    #[error("degenerate or mis-ordered decoy/signal pair (denominator {denominator:.3e})")]
    InvalidOrdering { denominator: f64 },
    /// The ratio-monotonicity premise underlying the bound fails for this
    /// pair of distributions; no bound is emitted.
    #[error("ratio-monotonicity premise fails for reference index {n_ref}")]
    PremiseViolation { n_ref: usize },
    /// The vacuum-term coefficient is positive, so substituting an upper
    /// bound for the background rate would not preserve the lower bound.
    #[error("background coefficient {coefficient:.3e} is positive; substitution invalid")]
    SignViolation { coefficient: f64 },
    /// The signal source has no vacuum component to anchor the background
    /// bound.
    #[error("signal distribution has no vacuum component")]
    VacuumFreeSource,
    /// A QBER bound was requested with a zero single-photon yield bound.
    #[error("single-photon yield bound is zero; error bound undefined")]
    UndefinedBound,

    // --- key rate / search ---
    /// Binary entropy argument outside [0, 1].
    #[error("binary entropy argument {0} outside [0, 1]")]
    EntropyDomain(f64),
    /// Decoy mean must be strictly below the signal mean.
    #[error("decoy mean {decoy} must be below signal mean {signal}")]
    MeanOrdering { decoy: f64, signal: f64 },
    /// Key rate is non-positive already at zero distance.
    #[error("key rate is not positive at zero distance; never secure")]
    NeverSecure,
    /// Every grid cell failed or produced a non-positive rate.
    #[error("no feasible parameter choice at L = {length_km} km")]
    EmptyFeasibleSet { length_km: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
