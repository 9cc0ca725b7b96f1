use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants map onto the CLI exit codes through [`Error::exit_code`]:
/// problems with the input data exit with 2, problems with the requested
/// configuration exit with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("value error in column `{column}` at row {row}: {message}")]
    Value {
        column: String,
        row: usize,
        message: String,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("weight error: {0}")]
    Weight(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("moment error: {0}")]
    Moment(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("prediction error: {0}")]
    Prediction(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code used in structured error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Value { .. } => "value",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::Weight(_) => "weight",
            Error::Type(_) => "type",
            Error::Data(_) => "data",
            Error::Aggregation(_) => "aggregation",
            Error::Undefined(_) => "undefined",
            Error::Moment(_) => "moment",
            Error::Fit(_) => "fit",
            Error::Prediction(_) => "prediction",
            Error::Format(_) => "format",
            Error::Solver(_) => "solver",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format(_) => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            row: e.line(),
            message: e.to_string(),
        }
    }
}
