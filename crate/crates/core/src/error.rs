use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scalar resolvent failed to converge for r = {r} (eps = {eps}) after {iterations} iterations")]
    ResolventNotConverged { r: f64, eps: f64, iterations: usize },

    #[error("inner iteration did not converge at step {step} (t = {t}): residual {residual:e} after {iterations} sweeps")]
    PicardNotConverged {
        step: usize,
        t: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("instability detected at t = {t}: field norm grew by factor {growth:e}")]
    Unstable { t: f64, growth: f64 },

    #[error("step size {dt} exceeds explicit stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("negative radicand {0:e} in dual norm (operator symmetry broken)")]
    NegativeRadicand(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("initial data violates the observation margin: {0}")]
    MarginViolation(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical solver itself (as opposed to bad input or I/O).
    pub fn is_solver_abort(&self) -> bool {
        matches!(
            self,
            Error::ResolventNotConverged { .. }
                | Error::PicardNotConverged { .. }
                | Error::Unstable { .. }
                | Error::NegativeRadicand(_)
        )
    }
}
