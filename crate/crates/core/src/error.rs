use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval: a = {a} must be strictly less than b = {b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid diffusion scale sigma = {0} (must be finite and > 0)")]
    InvalidSigma(f64),

    #[error("invalid drift mu = {0} (must be finite)")]
    InvalidDrift(f64),

    #[error("jump atom at {location} (weight {weight}) is outside the open interval ({a}, {b})")]
    AtomOutOfRange { location: f64, weight: f64, a: f64, b: f64 },

    #[error("jump weights sum to {sum}; expected 1")]
    WeightsNotNormalized { sum: f64 },

    #[error("point {0} lies outside the open interval")]
    OutOfDomain(f64),

    #[error("operation requires a strictly positive drift (mu = {0})")]
    RequiresPositiveDrift(f64),

    #[error("operation requires a single jump atom at the interval midpoint")]
    RequiresCenteredDelta,

    #[error("argument-principle contour passes through a zero after {dilations} dilations")]
    ContourThroughZero { dilations: usize },

    #[error("no nonzero eigenvalue inside the search box (re_max = {re_max}); enlarge the box")]
    BoxTooSmall { re_max: f64 },

    #[error("time step must be positive (dt = {0})")]
    NonpositiveDt(f64),

    #[error("exit not reached after {0} steps")]
    HorizonExceeded(u64),

    #[error("fit window [{t_min}, {t_max}] holds {n} usable points (need >= 3)")]
    WindowTooSparse { t_min: f64, t_max: f64, n: usize },

    #[error("fitted decay is not distinguishable from the noise floor (slope {slope})")]
    BelowNoiseFloor { slope: f64 },

    #[error("conditioned sampling acceptance {rate:e} fell below the floor {floor:e}")]
    RejectionBudgetExceeded { rate: f64, floor: f64 },

    #[error("coupling did not finish within {0} steps")]
    StageBudgetExceeded(u64),

    #[error("no plateau found up to mu = {mu_hi}")]
    NoPlateauFound { mu_hi: f64 },

    #[error("solver failed at mu = {mu}: {source}")]
    AtDrift {
        mu: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether this error originates from input validation (as opposed to a solver failure).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInterval { .. }
                | Error::InvalidSigma(_)
                | Error::InvalidDrift(_)
                | Error::AtomOutOfRange { .. }
                | Error::WeightsNotNormalized { .. }
                | Error::OutOfDomain(_)
                | Error::RequiresPositiveDrift(_)
                | Error::RequiresCenteredDelta
                | Error::InvalidArgument(_)
                | Error::Config(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
