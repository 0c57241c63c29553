use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("joint gain density is degenerate at beta = {beta}")]
    DegenerateDensity { beta: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error_estimate}")]
    NotConverged { estimate: f64, error_estimate: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle a root (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    BadBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no feasible point on the search grid")]
    NoFeasiblePoint,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("replication with seed {seed} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluator returned no metrics for sweep point {index}")]
    EmptyOutput { index: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True when the error reports an unreachable constraint (CLI exit code 3).
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible(_) | Error::NoFeasiblePoint => true,
            Error::Replication { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
