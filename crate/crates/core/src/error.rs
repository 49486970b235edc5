use thiserror::Error;

/// Errors raised by the model, the solver and the scenario lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("safety diverges: performance is zero while theta = {theta} > 0")]
    Domain { theta: f64 },

    #[error("problem needs at least 2 players, got {0}")]
    TooFewPlayers(usize),

    #[error("length mismatch: expected {expected} entries, got {got} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("player index {index} out of range for {n} players")]
    PlayerIndex { index: usize, n: usize },

    #[error("payoff of player {player} is non-finite at every start point")]
    NonFinitePayoff { player: usize },

    #[error("the grid oracle supports exactly 2 players, got {0}")]
    OracleSize(usize),

    #[error("invalid solver config: {0}")]
    SolverConfig(String),

    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),

    #[error("unknown claim `{0}`")]
    UnknownClaim(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field: field.into(),
        reason: reason.into(),
    }
}
