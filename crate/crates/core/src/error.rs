use thiserror::Error;

/// Errors raised while building models or evaluating geometric quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is degenerate (|det| = {det:e})")]
    DegenerateMetric { det: f64 },
    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("tensor dimensions do not match: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("metric signature is ({pos},{neg}), expected ({want_pos},{want_neg})")]
    BadSignature {
        pos: usize,
        neg: usize,
        want_pos: usize,
        want_neg: usize,
    },
    #[error("structure constants are not antisymmetric at [{i},{j}] component {k}")]
    NotAntisymmetric { i: usize, j: usize, k: usize },
    #[error("coframe is singular at the sample point")]
    SingularCoframe,
    #[error("base is not holomorphic: residual {residual:e} exceeds {tolerance:e}")]
    BaseNotHolomorphic { residual: f64, tolerance: f64 },
    #[error("cone coordinate r must be negative, got {r}")]
    RNotNegative { r: f64 },
    #[error("point has {got} coordinates, model expects {want}")]
    BadPoint { got: usize, want: usize },
    #[error("h-sphere parameters (a, b) must not both vanish")]
    DegenerateParameters,
    #[error("structure is not Sasaki-like (residual {residual:e})")]
    NotSasakiLike { residual: f64 },
    #[error("transformation parameters must be constant for this operation")]
    NonConstantParams,
    #[error("unknown built-in model `{0}`")]
    UnknownBuiltin(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("parameter mismatch between representations: {0}")]
    ParamMismatch(String),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
