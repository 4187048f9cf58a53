use thiserror::Error;

use crate::flow::FlowHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve has {0} vertices, at least 16 are required")]
    TooFewVertices(usize),
    #[error("edge {0} has zero length")]
    DegenerateEdge(usize),
    #[error("enclosed signed area {area:e} is numerically zero for length {length}")]
    ZeroVolume { area: f64, length: f64 },
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("no progress: time step underflowed to {dt:e} at t = {t}")]
    NoProgress { t: f64, dt: f64 },
    #[error("index {index} out of range (valid {lo}..={hi})")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },
    #[error("snapshots around index {0} are separated by a resample; no material correspondence")]
    ResampledWindow(usize),
    #[error("query out of range: {0}")]
    QueryOutOfRange(String),
    #[error("beta = {beta} is not below beta_0 = {beta0}")]
    BetaTooLarge { beta: f64, beta0: f64 },
    #[error("({x:?}, {t}) is not reached by the flow: density {density}")]
    PointNotReached { x: [f64; 2], t: f64, density: f64 },
    #[error("no snapshot at or before the reference time {0}")]
    EmptyWindow(f64),
    #[error("history did not end in a singularity")]
    NoSingularity,
    #[error("tau = {0} must be negative")]
    NonNegativeTau(f64),
    #[error("normalization failed: max |kappa|^2 |tau| = {0} > 1")]
    NormalizationFailed(f64),
    #[error("integrand is not integrable at the rotation axis")]
    AxisSingularity,
    #[error("no closed form for this segment: {0}")]
    UnsupportedSegment(String),
    #[error("parameter domain violated: {0}")]
    ParameterDomain(String),
    #[error("total mean curvature {total_h:e} is not balanced (area {area})")]
    NotBalanced { total_h: f64, area: f64 },
    #[error("bad scenario parameters: {0}")]
    BadParameters(String),
    #[error("isoperimetric ratio tail is inconclusive: {0}")]
    Inconclusive(String),
    #[error("malformed snapshot data: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of [`crate::flow::run`] when the run cannot reach `t_end`.
#[derive(Debug, Error)]
pub enum FlowError {
    /// The partial history is tagged with the extinction-time estimate.
    #[error("singularity reached, estimated time {t_estimate}")]
    SingularityReached {
        history: Box<FlowHistory>,
        t_estimate: f64,
    },
    #[error(transparent)]
    Numerical(#[from] Error),
}

impl FlowError {
    /// The history recorded up to the singularity, if there is one.
    pub fn into_history(self) -> Option<FlowHistory> {
        match self {
            FlowError::SingularityReached { history, .. } => Some(*history),
            FlowError::Numerical(_) => None,
        }
    }
}
