use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters violate the anti-PT template: {0}")]
    NotAntiPt(String),

    #[error("unstable linear system (amplification, no steady state): max Im(lambda) = {max_im:e}")]
    UnstableLinear { max_im: f64 },

    #[error("undamped resonance: no finite steady state in linear limit")]
    UndampedResonance,

    #[error("root reconstruction failure: |B|^2 = {got:e} for root x = {x:e}")]
    RootReconstruction { x: f64, got: f64 },

    #[error("runaway amplitude at t = {t:e}")]
    Runaway { t: f64 },

    #[error("singular steady-state system")]
    Singular,

    #[error("eigensolver did not converge for matrix {matrix}")]
    EigenNonConvergence { matrix: String },

    #[error("integrator step size underflow at t = {t:e}")]
    StepUnderflow { t: f64 },

    #[error("no steady state reached before t = {t:e}")]
    Timeout { t: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
