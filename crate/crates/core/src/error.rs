use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("raster dimensions differ: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        what: &'static str,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("road vectors require a world file for georeferencing")]
    MissingGeoref,

    #[error("{}: malformed file at byte {offset}: {message}", path.display())]
    MalformedFile {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("geotransform is not invertible (determinant {det})")]
    SingularTransform { det: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("polygon degenerated to {vertices} vertices")]
    DegeneratePolygon { vertices: usize },

    #[error("rectangles do not share an edge")]
    NotAdjacent,

    #[error("invalid roof parameters: {0}")]
    InvalidParams(String),

    #[error("only {valid} valid DSM cells in footprint, need at least {needed}")]
    InsufficientData { valid: usize, needed: usize },

    #[error("both inputs are empty")]
    EmptyInputs,

    #[error("footprint contains no interior cells")]
    EmptyFootprint,

    #[error("invalid roof model: {0}")]
    InvalidModel(String),

    #[error("reference is empty")]
    EmptyReference,

    #[error("buildings {a} and {b} overlap")]
    Overlap { a: usize, b: usize },

    #[error("{name} = {value} is outside the allowed range [{lo}, {hi}]")]
    ConfigOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("input is {width}x{height}, the maximum is {max}x{max}")]
    InputTooLarge {
        width: usize,
        height: usize,
        max: usize,
    },

    #[error("segment {segment}: {source}")]
    Stage {
        segment: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case identifier used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MissingGeoref => "missing_georef",
            Error::MalformedFile { .. } => "malformed_file",
            Error::SingularTransform { .. } => "singular_transform",
            Error::Io { .. } => "io_failure",
            Error::DegeneratePolygon { .. } => "degenerate_polygon",
            Error::NotAdjacent => "not_adjacent",
            Error::InvalidParams(_) => "invalid_params",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::EmptyInputs => "empty_inputs",
            Error::EmptyFootprint => "empty_footprint",
            Error::InvalidModel(_) => "invalid_model",
            Error::EmptyReference => "empty_reference",
            Error::Overlap { .. } => "overlap",
            Error::ConfigOutOfRange { .. } => "config_out_of_range",
            Error::InputTooLarge { .. } => "input_too_large",
            Error::Stage { source, .. } => source.code(),
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, offset: usize, message: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn in_segment(self, segment: u32) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                segment,
                source: Box::new(e),
            },
        }
    }
}
