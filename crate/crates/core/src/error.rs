use thiserror::Error;

/// Standing assumptions on the model tooth, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToothAssumption {
    /// The polygon lies in the box (-R1, R1) x [0, L].
    Containment,
    /// The part of the boundary on {y = 0} is exactly the closed base interval.
    BaseTrace,
    /// The base interval has unit length.
    BaseMeasure,
    /// The base interval contains the origin.
    OriginInBase,
    /// The collar omega x (0, delta0) is contained in the tooth.
    Collar,
}

impl std::fmt::Display for ToothAssumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ToothAssumption::Containment => "tooth not contained in (-R1,R1)x(0,L)",
            ToothAssumption::BaseTrace => "boundary on y=0 differs from closure(omega)",
            ToothAssumption::BaseMeasure => "|omega| != 1",
            ToothAssumption::OriginInBase => "0 not in omega",
            ToothAssumption::Collar => "omega x (0,delta0) not inside tooth",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("polygon is not simple: {0}")]
    NonSimplePolygon(String),
    #[error("tooth assumption violated ({assumption}): {detail}")]
    Violation {
        assumption: ToothAssumption,
        detail: String,
    },
    #[error("invalid brush: {0}")]
    Brush(String),
    #[error("placement error: {0}")]
    Placement(String),
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh parameter: {0}")]
    Parameter(String),
    #[error("mesh too coarse: {0}")]
    Refinement(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("malformed mesh file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error("negative or non-finite weight {value} at ({x}, {y})")]
    Weight { value: f64, x: f64, y: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("tooth is not nicely decomposed: {0}")]
    NotNicelyDecomposed(String),
    #[error("continuity violated at joint (stage {stage}, k = {joint}): spread {spread:e}")]
    Continuity {
        stage: usize,
        joint: usize,
        spread: f64,
    },
    #[error("field is not constant on horizontal sections: {0}")]
    NotXiConstant(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Error)]
pub enum UnfoldError {
    #[error("field does not live on the instanced brush mesh: {0}")]
    ForeignMesh(String),
}

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("no closed form density for this placement family")]
    Unsupported,
    #[error("averaging window {window} must exceed 2*C*eps = {min}")]
    WindowTooSmall { window: f64, min: f64 },
}

#[derive(Debug, Error)]
pub enum LimitError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("inconsistent limit data: {0}")]
    Inconsistent(String),
}

/// Top-level error used by the sweep driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::Geometry(_) | Error::Mesh(_) | Error::Graph(GraphError::NotNicelyDecomposed(_)) => 3,
            Error::Graph(GraphError::Geometry(_)) => 3,
            _ => 4,
        }
    }
}
