use thiserror::Error;

/// Every failure the library reports.
///
/// Variants are grouped by the layer that raises them; the CLI maps each
/// group onto an exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("value out of representable range: {0}")]
    Range(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("argument lies outside both far-field cones")]
    Sector,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("no admissible angle found: {0}")]
    SearchExhausted(String),
    #[error("growth function too slow: {0}")]
    GrowthTooSlow(String),
    #[error("missing certificate for level {0}")]
    CertMissing(usize),
    #[error("construction invariant violated: {0}")]
    Construction(String),
    #[error("argument of w is not inside a certified sector: {0}")]
    UncertifiedAngle(String),
    #[error("requested radius lies beyond the last planned level")]
    TailUnavailable,
    #[error("plan depth insufficient: {0}")]
    DepthInsufficient(String),
    #[error("tolerance unreachable: {0}")]
    ToleranceUnreachable(String),

    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
