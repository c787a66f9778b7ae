use std::fmt;

use thiserror::Error;

/// Errors produced by the DTM pipeline and its stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported input format: {0}")]
    UnsupportedFormat(String),

    #[error("input contains no valid points")]
    EmptyInput,

    #[error("malformed record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },

    #[error("cell size must be positive and finite, got {0}")]
    NonPositiveCell(f64),

    #[error("raster has no occupied cells to fill voids from")]
    AllVoid,

    #[error("grid {ncols}x{nrows} is too small (need at least 3x3)")]
    GridTooSmall { ncols: usize, nrows: usize },

    #[error("slope threshold must lie in (0, 90) degrees, got {0}")]
    BadThreshold(f64),

    #[error("fewer than 3 non-collinear ground pixels available for interpolation")]
    InsufficientGround,

    #[error("raster grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ascii grid header error: {0}")]
    HeaderMismatch(String),

    #[error("scene description line {line}: {reason}")]
    SceneParse { line: usize, reason: String },

    #[error("empty scene extent")]
    EmptyExtent,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage used to attribute errors in [`Error::Stage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Raster,
    Slope,
    GroundFilter,
    Interp,
    Hydro,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ingest => "ingest",
            Stage::Raster => "raster",
            Stage::Slope => "slope",
            Stage::GroundFilter => "groundfilter",
            Stage::Interp => "interp",
            Stage::Hydro => "hydro",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

impl Error {
    /// Wraps the error with the stage it came from.
    pub fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error with stage attribution stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 input error, 3 parameter error, 4 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::UnsupportedFormat(_)
            | Error::EmptyInput
            | Error::MalformedRecord { .. }
            | Error::AllVoid
            | Error::GridTooSmall { .. }
            | Error::InsufficientGround
            | Error::HeaderMismatch(_)
            | Error::SceneParse { .. }
            | Error::EmptyExtent
            | Error::GridMismatch(_)
            | Error::Io(_) => 2,
            Error::NonPositiveCell(_) | Error::BadThreshold(_) | Error::InvalidParameter(_) => 3,
            Error::Invariant(_) | Error::Stage { .. } => 4,
        }
    }
}
