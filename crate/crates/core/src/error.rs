use thiserror::Error;

pub type Result<T, E = GeomError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate metric at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("chart boundary: {point:?} is outside the chart domain")]
    ChartBoundary { point: Vec<f64> },

    #[error("point off manifold (constraint residual {residual:e})")]
    PointOffManifold { residual: f64 },

    #[error("vector not tangent (projection defect {defect:e})")]
    NotTangent { defect: f64 },

    #[error("geodesic left domain at t = {time}")]
    GeodesicLeftDomain { time: f64 },

    #[error("curve left domain at node {node}")]
    CurveLeftDomain { node: usize },

    #[error("not vertical: second-tangent k-component is nonzero")]
    NotVertical,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<GeomError>,
    },

    #[error("no velocities stored on path")]
    NoVelocities,

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown manifold '{0}'")]
    UnknownManifold(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(&'static str),

    #[error("measure not normalized (total mass {total})")]
    MeasureNotNormalized { total: f64 },

    #[error("Monge regime required: equal atom counts and equal masses")]
    MongeRegimeRequired,

    #[error("use assignment solver: brute force limited to 8 atoms, got {0}")]
    TooManyAtoms(usize),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("format error: {0}")]
    Format(String),
}

impl GeomError {
    pub(crate) fn at_sample(index: usize, err: GeomError) -> Self {
        GeomError::AtSample {
            index,
            source: Box::new(err),
        }
    }
}
