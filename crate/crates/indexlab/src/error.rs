use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecFnError {
    #[error("argument {re}{im:+}i is within the pole guard of Γ")]
    PoleProximity { re: f64, im: f64 },
    #[error("integer order m = {m} hits a pole of Γ(±m)")]
    IntegerOrder { m: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("parameters are not self-adjoint: {0}")]
    NotSelfAdjoint(String),
    #[error("m = 0 is excluded")]
    MExcluded,
    #[error("branch mismatch: {0}")]
    BranchMismatch(String),
    #[error("denominator comes within {margin:e} of zero")]
    DenominatorNearZero { margin: f64 },
    #[error(transparent)]
    SpecFn(#[from] SpecFnError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WindingError {
    #[error("curve passes within 1e-8 of zero at parameter {param}")]
    ZeroCrossing { param: f64 },
    #[error("phase refinement exhausted at parameter {param}")]
    RefinementExhausted { param: f64 },
    #[error("curve is not closed: |f(0) - f(L)| = {residual:e}")]
    NotClosed { residual: f64 },
    #[error("corner residual {residual:e} exceeds the allowed 1e-3")]
    CornerMismatch { residual: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuantizeError {
    #[error("grid resolution too coarse: N = {n} needs at least {required}")]
    Resolution { n: usize, required: f64 },
    #[error("invalid discretization: {0}")]
    InvalidSpec(String),
    #[error("position factor `{label}` is not periodic with period {period} (defect {defect:e})")]
    Periodicity { label: String, period: f64, defect: f64 },
    #[error("momentum symbol does not decay integrably (tail {tail:e})")]
    DecayViolation { tail: f64 },
    #[error("unsupported representation: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Aggregate error for scenario runs.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    SpecFn(#[from] SpecFnError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Winding(#[from] WindingError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
}

impl Error {
    /// True for failures of a numerical guard rather than of the inputs.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::Winding(WindingError::RefinementExhausted { .. })
                | Error::Winding(WindingError::ZeroCrossing { .. })
                | Error::Winding(WindingError::CornerMismatch { .. })
        )
    }
}
