use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density values must be non-increasing in r (violation at node {index}: {delta})")]
    NonMonotoneDensity { index: usize, delta: f64 },

    #[error("mass coordinate must lie in (0,1), got {0}")]
    BadMassCoordinate(f64),

    #[error("radius outside the density support: r = {r}, support radius = {support}")]
    OutsideSupport { r: f64, support: f64 },

    #[error("endpoint has a plateau (h' locally constant); strictly decreasing profiles required")]
    PlateauEndpoint,

    #[error("height functions live on mismatched mass grids")]
    MassGridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("derivative of a step potential is distributional; not pointwise evaluable")]
    StepDerivative,

    #[error("unsupported potential for this operation: {0}")]
    UnsupportedPotential(String),

    #[error("fixed point iteration did not converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("multiplier bracket search failed on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("time step rejected: {0}")]
    StepRejected(String),

    #[error("dissipation tail has not settled; no steady candidate extracted ({0})")]
    NoExtraction(String),

    #[error("slope search exhausted without maintaining flatness (tried down to eps = {eps:.3e})")]
    SlopeSearchFailed { eps: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
