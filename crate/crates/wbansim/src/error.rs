//! Error types shared across the crate, grouped by failure class so the CLI
//! can map each class to a distinct exit code.

use thiserror::Error;

/// BVH text parsing failures.
#[derive(Debug, Error)]
pub enum BvhError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },
}

/// Geometric failures (degenerate skeletons, buried nodes, off-surface points).
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("frame index {index} out of range (frame count {count})")]
    FrameOutOfRange { index: usize, count: usize },
    #[error("joint {0:?} not found in pose")]
    UnknownJoint(String),
    #[error("skeleton is degenerate: measured height {0} m is below 1 mm")]
    DegenerateSkeleton(f64),
    #[error("hip center and neck coincide; cylinder axis undefined")]
    CoincidentTorsoJoints,
    #[error("cylinder radius/height must be positive (radius {radius}, height {height})")]
    InvalidCylinder { radius: f64, height: f64 },
    #[error("node {which} at {position:?} lies inside the torso cylinder")]
    NodeInsideCylinder { which: &'static str, position: [f64; 3] },
    #[error("point {0:?} is not on the cylinder lateral surface")]
    PointOffSurface([f64; 3]),
    #[error("transmitter and receiver coincide")]
    CoincidentEndpoints,
    #[error("path-loss undefined: {0}")]
    Numeric(String),
    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<GeometryError>,
    },
}

/// Domain errors on scalar model inputs (nonpositive distances, bad windows).
#[derive(Debug, Error)]
pub enum DataError {
    #[error("distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("need at least {need} samples, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("series is constant; autocorrelation undefined")]
    ConstantSeries,
    #[error("window contains only zeros; variation factor undefined")]
    AllZeroWindow,
    #[error("{0}")]
    Invalid(String),
}

/// Scenario / controller configuration failures.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("burst intervals overlap: [{0}, {1}] and [{2}, {3}]")]
    OverlappingIntervals(f64, f64, f64, f64),
    #[error("heart rate {0} bpm outside supported range [30, 220]")]
    HeartRateOutOfRange(f64),
    #[error("power level {0} dBm missing from energy table")]
    MissingEnergyEntry(f64),
    #[error("reports use different radio configurations: {0}")]
    MismatchedReports(String),
}

/// CSV / JSON input failures.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("{0}")]
    Json(String),
}

/// Top-level error for the CLI layer; each variant is one exit-code class.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bvh(#[from] BvhError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for this error class. 0 is success, 2 is reserved
    /// for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 10,
            Error::Io { .. } => 11,
            Error::Bvh(_) | Error::Format(_) => 12,
            Error::Geometry(_) => 13,
            Error::Data(_) => 14,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
