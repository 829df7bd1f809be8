//! One error type for the whole crate.

use thiserror::Error;

/// Everything that can go wrong while building fields or running checks.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An expression evaluated to a non-finite value (division by zero,
    /// square root of a non-positive number, ...).
    #[error("non-finite value while evaluating `{expr}` at {point:?}")]
    NonFinite { expr: String, point: Vec<f64> },

    /// Requested jet order above the supported cap.
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },

    /// A multi-index of total degree beyond the jet's truncation order.
    #[error("multi-index {index:?} has total degree above the jet order {order}")]
    IndexOutOfOrder { index: Vec<u8>, order: usize },

    /// Form/multivector degrees do not fit the requested operation.
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    /// Wedge product would exceed the chart dimension.
    #[error("wedge degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    /// Metric not positive definite (or not invertible) at a point.
    #[error("metric is singular or not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },

    /// Geodesic integration stepped outside the chart's valid domain.
    #[error("trajectory left the chart domain near {point:?}: {reason}")]
    LeftChartDomain { point: Vec<f64>, reason: String },

    /// Metacurvature requested where the connection is not flat.
    #[error("metacurvature undefined: curvature residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotFlat { residual: f64, tol: f64 },

    /// Metacurvature requested where the connection has torsion.
    #[error("metacurvature undefined: torsion residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    HasTorsion { residual: f64, tol: f64 },

    /// The bivector is not invertible, so the symplectic route does not apply.
    #[error("Poisson bivector is degenerate at {point:?} (|det pi| = {det:.3e})")]
    DegeneratePoisson { point: Vec<f64>, det: f64 },

    /// The symplectic oracle needs a declared flat frame.
    #[error("chart declares no flat frame; the symplectic metacurvature route is unavailable")]
    NoFlatFrame,

    /// Killing reconstruction does not reproduce the declared bivector.
    #[error("Killing reconstruction mismatch: residual {residual:.3e} at {point:?}")]
    ReconstructionMismatch { residual: f64, point: Vec<f64> },

    /// No catalog entry with the given name.
    #[error("unknown catalog entry `{0}`; run `list-examples` for the available names")]
    UnknownEntry(String),

    /// Chart file parse error.
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    /// An expression references a coordinate the chart does not declare.
    #[error("line {line}: unknown coordinate `{name}`")]
    UnknownCoordinate { line: usize, name: String },

    /// Conflicting off-diagonal metric entries.
    #[error("line {line}: metric entries g {i} {j} and g {j} {i} disagree")]
    Asymmetry { line: usize, i: usize, j: usize },

    /// Nonzero diagonal (or doubly declared) bivector entry.
    #[error("line {line}: {msg}")]
    Symmetry { line: usize, msg: String },

    /// Anything else that makes the input unusable.
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
