use thiserror::Error;

/// Failures raised by the geometric and numerical routines.
///
/// Every variant carries enough context to be reported by the command-line
/// front end without further lookup.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("metric is not symmetric at {point:?} (asymmetry {asymmetry:e})")]
    NonSymmetric { point: Vec<f64>, asymmetry: f64 },

    #[error("metric does not have Lorentzian signature at {point:?} (eigenvalues {eigenvalues:?})")]
    NonLorentzian {
        point: Vec<f64>,
        eigenvalues: Vec<f64>,
    },

    #[error("metric is singular at {point:?} (|det g| = {det:e})")]
    Singular { point: Vec<f64>, det: f64 },

    #[error("finite differencing produced a non-finite value at {point:?}")]
    DifferentiationFailure { point: Vec<f64> },

    #[error("vector is not timelike (g(V,V) = {norm_sq:e})")]
    NotTimelike { norm_sq: f64 },

    #[error("vector is past-directed (time component {time_component:e})")]
    PastDirected { time_component: f64 },

    #[error("causal character of the zero vector is undefined")]
    ZeroVector,

    #[error("tangent vectors are linearly dependent at parameter {param:?}")]
    DegenerateImmersion { param: Vec<f64> },

    #[error("surface is not spacelike at parameter {param:?}")]
    NotSpacelike { param: Vec<f64> },

    #[error("flow left the chart domain at flow time {tau}")]
    LeftChartDomain { tau: f64 },

    #[error("integrator step {step:e} too large: full step and two half steps differ by {discrepancy:e}")]
    StepSizeTooLarge { step: f64, discrepancy: f64 },

    #[error("sign changes of the norm function are not resolvable near tau = {tau}")]
    RootNotBracketable { tau: f64 },

    #[error("velocity |v| = {speed} is not below the speed of light")]
    SuperluminalVelocity { speed: f64 },

    #[error("rescaling function is not strictly positive at {point:?} (value {value:e})")]
    NonPositiveRescaling { point: Vec<f64>, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl GeometryError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            GeometryError::NonSymmetric { .. } => "NonSymmetric",
            GeometryError::NonLorentzian { .. } => "NonLorentzian",
            GeometryError::Singular { .. } => "Singular",
            GeometryError::DifferentiationFailure { .. } => "DifferentiationFailure",
            GeometryError::NotTimelike { .. } => "NotTimelike",
            GeometryError::PastDirected { .. } => "PastDirected",
            GeometryError::ZeroVector => "ZeroVector",
            GeometryError::DegenerateImmersion { .. } => "DegenerateImmersion",
            GeometryError::NotSpacelike { .. } => "NotSpacelike",
            GeometryError::LeftChartDomain { .. } => "LeftChartDomain",
            GeometryError::StepSizeTooLarge { .. } => "StepSizeTooLarge",
            GeometryError::RootNotBracketable { .. } => "RootNotBracketable",
            GeometryError::SuperluminalVelocity { .. } => "SuperluminalVelocity",
            GeometryError::NonPositiveRescaling { .. } => "NonPositiveRescaling",
            GeometryError::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeometryError>;
