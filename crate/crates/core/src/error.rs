use thiserror::Error;

pub type Result<T> = std::result::Result<T, SolverError>;

/// Everything that can go wrong between a shooting problem and a finished record.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("radial equation evaluated at r = {r}; the origin must be handled by the series start")]
    Domain { r: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step size underflow at r = {r} (h = {h:e})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("non-finite derivative at r = {r}")]
    NonFinite { r: f64 },

    #[error("step budget of {max_steps} exhausted at r = {r}")]
    StepBudget { r: f64, max_steps: usize },

    #[error("shot failed at beta = {beta}, delta = {delta}: {source}")]
    Shot {
        beta: f64,
        delta: f64,
        #[source]
        source: Box<SolverError>,
    },

    #[error("beta bracket [{lo}, {hi}] does not straddle an eigenvalue at delta = {delta}")]
    Bracket { lo: f64, hi: f64, delta: f64 },

    #[error("beta bracket collapsed without a classification flip at beta = {beta}, delta = {delta}")]
    Degenerate { beta: f64, delta: f64 },

    #[error("charge q(delta) - 1 could not be bracketed (last delta = {delta}, q = {q})")]
    ChargeBracket { delta: f64, q: f64 },

    #[error("charge estimates disagree (integral {integral}, flux {flux}) at r0 = {r0}; increase r_max")]
    CutoffTooSmall { integral: f64, flux: f64, r0: f64 },

    #[error("growing magnetic mode cannot be cancelled at r0 = {r0} (condition {condition:e})")]
    IllConditionedTail { r0: f64, condition: f64 },

    #[error("optimizer did not converge after {iterations} iterations (best W = {best})")]
    NoConvergence { iterations: usize, best: f64 },

    #[error("non-normalizable trial function: {0}")]
    NotNormalizable(String),
}

impl SolverError {
    /// Attach the (beta, delta) pair of the failing shot.
    pub fn at_shot(self, beta: f64, delta: f64) -> Self {
        match self {
            e @ SolverError::Shot { .. } => e,
            e => SolverError::Shot {
                beta,
                delta,
                source: Box::new(e),
            },
        }
    }

    /// Bracketing problems map to exit code 2, numerical failures to 3.
    pub fn is_bracket_error(&self) -> bool {
        match self {
            SolverError::Bracket { .. }
            | SolverError::Degenerate { .. }
            | SolverError::ChargeBracket { .. } => true,
            SolverError::Shot { source, .. } => source.is_bracket_error(),
            _ => false,
        }
    }
}
