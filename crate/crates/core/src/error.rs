use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("populations must be nonnegative (R = {r}, B = {b})")]
    NegativePopulation { r: f64, b: f64 },
    #[error("share must lie in [0, 1], got {0}")]
    ShareOutOfRange(f64),
    #[error("ratio must be finite and nonnegative, got {0}")]
    InvalidRatio(f64),
    #[error("total population R + B must be positive")]
    ZeroTotalPopulation,
    #[error("ratio undefined on the B = 0 face (x = 1)")]
    RatioUndefined,
    #[error("initial ratio {y0} not admissible: {reason}")]
    InvalidInitialRatio { y0: f64, reason: &'static str },
    #[error("t = {t} lies beyond the maximal interval [0, {t_max})")]
    BeyondMaximalInterval { t: f64, t_max: f64 },
    #[error("integration exhausted the step limit of {0}")]
    StepLimit(usize),
    #[error("non-finite right-hand side near t = {0}")]
    NonFiniteRhs(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("equilibrium outside buffer (m_eps = {0})")]
    EquilibriumOutsideBuffer(f64),
    #[error("invalid corridor: {0}")]
    InvalidCorridor(String),
    #[error("schedule bounds ({abar}, {bbar}) exceed the corridor bounds")]
    ScheduleExceedsBounds { abar: f64, bbar: f64 },
    #[error("invalid buffer law: {0}")]
    InvalidBufferLaw(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("initial vector must be nonzero")]
    ZeroInitialVector,
    #[error("precondition violated: {0}")]
    Precondition(String),
}
