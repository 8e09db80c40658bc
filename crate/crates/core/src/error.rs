use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole of {func} at {at}")]
    Pole { func: &'static str, at: f64 },
    #[error("ARMA polynomial not invertible: {0}")]
    NonInvertible(String),
    #[error("degenerate level: sum of squared convoluted coefficients is {0:e}")]
    DegenerateLevel(f64),
    #[error("singular Gram matrix of the filtered deterministic terms")]
    SingularGram,
    #[error("singular Hessian at the estimate")]
    SingularHessian,
    #[error("every optimizer start failed")]
    AllStartsFailed,
    #[error("objective is not finite at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("d = {d} is within {band} of 1/2, where the bias expansions do not apply")]
    BoundaryD { d: f64, band: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
