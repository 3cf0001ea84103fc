use thiserror::Error;

/// Errors raised by the verification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("band {band} needs frequency {needed:.3e} but the grid Nyquist frequency is {nyquist:.3e}")]
    Nyquist { band: i32, needed: f64, nyquist: f64 },

    #[error("computational box too small: {0}")]
    BoxTooSmall(String),

    #[error("exponent pair (p, q) = ({p}, {q}) is not admissible: {reason}")]
    InadmissiblePair { p: f64, q: f64, reason: String },

    #[error("regularity s = {s} outside the allowed range {range}")]
    RegularityOutOfRange { s: f64, range: &'static str },

    #[error("dense computation guard: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },

    #[error("no decaying Floquet mode: |trace| = {0} <= 2")]
    StableMonodromy(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("linear system is singular")]
    Singular,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
