use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input amplitudes have (near) zero norm")]
    ZeroVector,
    #[error("non-finite amplitude in input")]
    NonFinite,
    #[error("channel coefficients are not normalized: a0^2+a1^2+a2^2 = {sum}")]
    NotNormalized { sum: f64 },
    #[error("channel coefficients must satisfy a0 <= a1 <= a2, got ({a0}, {a1}, {a2})")]
    NotOrdered { a0: f64, a1: f64, a2: f64 },
    #[error("channel coefficient is negative: {value}")]
    Negative { value: f64 },
    #[error("qutrit dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qutrit index {index} out of range for a {n_qutrits}-qutrit register")]
    IndexOutOfRange { index: usize, n_qutrits: usize },
    #[error("measured pair uses the same qutrit twice ({0})")]
    DuplicateIndex(usize),
    #[error("outcome {0} has zero probability")]
    ZeroProbabilityOutcome(String),
    #[error("Kraus pair violates completeness (deviation {deviation:e})")]
    IncompleteKraus { deviation: f64 },
    #[error("channel has a0 = 0; recovery operators are undefined")]
    DegenerateChannel,
    #[error("no printed correction unitary canonicalizes outcome ({m},{n})")]
    NoValidPairing { m: u8, n: u8 },
    #[error("correction left residual phases for m = {m} (spread {spread:e})")]
    PhaseCancellation { m: u8, spread: f64 },
    #[error("{hops} hops exceed the exhaustive enumeration bound of {limit}")]
    TooManyHops { hops: usize, limit: usize },
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("a0 = {0} lies outside (0, 1/sqrt(3)]")]
    GridOutOfRange(f64),
    #[error("recovered state lost fidelity: {0}")]
    FidelityLoss(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
