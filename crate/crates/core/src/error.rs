use thiserror::Error;

/// Failures of the special-function kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument {name} = {value} outside the domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("{function}: series did not converge within {terms} terms")]
    NotConverged { function: &'static str, terms: usize },
    #[error("{function}: partial sums overflowed")]
    Overflow { function: &'static str },
}

/// Failures while validating specs or building generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{rate} rate at state {state} is invalid: {value}")]
    InvalidRate {
        rate: &'static str,
        state: usize,
        value: f64,
    },
    #[error("catastrophe rate must be finite and nonnegative, got {0}")]
    InvalidCatastrophe(f64),
    #[error("window must hold at least 3 states (upper >= 2), got upper = {0}")]
    WindowTooSmall(usize),
    #[error("state {state} outside window [{lo}, {hi}]")]
    StateOutsideWindow { state: usize, lo: usize, hi: usize },
    #[error("state {state} below the floor state {floor}")]
    BelowFloor { state: usize, floor: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset `{preset}`: parameter `{param}` {problem}")]
    BadParameter {
        preset: String,
        param: String,
        problem: String,
    },
}

/// Failures of the numerical engines (transient, resolvent, analysis, closed forms).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("window could not be certified: tail mass {tail_mass:e} with upper = {upper}")]
    WindowOverflow { upper: usize, tail_mass: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular linear system at pivot {0}")]
    Singular(usize),
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },
    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("stationary tail vanishes above state {state}; the window is too small")]
    VanishingTail { state: usize },
    #[error("stationary balance residual {residual:e} above bound {bound:e}")]
    Residual { residual: f64, bound: f64 },
}

/// Crate-level error with module provenance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("specfun: {0}")]
    SpecFun(#[from] SpecFunError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("montecarlo: {0}")]
    MonteCarlo(String),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
