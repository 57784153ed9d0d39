use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("invalid {name}: {reason}")]
    InvalidInput { name: &'static str, reason: String },
    #[error("no semi-axis gives perimeter {perimeter} with other semi-axis {b}")]
    InfeasibleGeometry { perimeter: f64, b: f64 },
    #[error("posture matrix is singular (condition number {condition:.3e})")]
    PostureSingular { condition: f64 },
    #[error("inertia target {target} is not attainable (best residual {residual:.3e})")]
    Unrealizable { target: f64, residual: f64 },
    #[error("mass matrix is singular at lean {lean} rad")]
    MassMatrixSingular { lean: f64 },
    #[error("step size {step:.3e} underflowed at t = {t}")]
    StepUnderflow { t: f64, step: f64 },
    #[error("derivative evaluation failed at t = {t}: {message}")]
    Rhs { t: f64, message: String },
    #[error("step check failed at t = {t}: {message}")]
    Hook { t: f64, message: String },
    #[error("dynamics failed in interval {interval}: {message}")]
    Defect { interval: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<f64> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput {
            name,
            reason: format!("must be positive, got {v}"),
        })
    }
}
