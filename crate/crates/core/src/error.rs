use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A g-parameter product left the open interval (0, 1).
    #[error("unstable cavity: g-product along {axis} is {product} (must lie in (0, 1))")]
    Stability { axis: char, product: f64 },

    #[error("no bracket for root search: {0}")]
    NoBracket(String),

    #[error("singular point: {0}")]
    Singularity(String),

    #[error("classical integration diverged at t = {time} (|alpha| = {magnitude:e})")]
    Divergence { time: f64, magnitude: f64 },

    #[error("trajectory {traj_index} diverged at t = {time}")]
    TrajectoryDiverged { traj_index: u64, time: f64 },

    /// Too many trajectories diverged for the ensemble averages to be trusted.
    #[error("{diverged} of {total} trajectories diverged (budget is 1%)")]
    DivergenceBudget { diverged: usize, total: usize },

    #[error("operation requires the above-threshold regime (rho = 0)")]
    BelowThreshold,

    #[error("no stationary state: the orientation matrix has a zero eigenvalue (delta = 0)")]
    NoStationaryState,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
