use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Every variant maps onto one of the CLI exit classes through
/// [`Error::exit_code`]: configuration (2), data (3) or numerical (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data for {what}: {detail}")]
    InsufficientData { what: String, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate binned variance for asset {0}")]
    DegenerateVariance(String),

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("metadata error: {0}")]
    Metadata(String),

    #[error("lag {lag} out of range for J = {j}")]
    LagOutOfRange { lag: i64, j: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("allocation error: {0}")]
    Allocation(String),

    #[error("degenerate normalization: coordinate sum {0:e} is numerically zero")]
    DegenerateNormalization(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn insufficient(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InsufficientData {
            what: what.into(),
            detail: detail.into(),
        }
    }

    /// Wraps the error with a human readable location, e.g. `"DCC 2013-05-02"`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::InsufficientData { .. }
            | Error::Domain(_)
            | Error::DegenerateVariance(_)
            | Error::Misaligned(_)
            | Error::Metadata(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 3,
            Error::LagOutOfRange { .. }
            | Error::Singular(_)
            | Error::Fit(_)
            | Error::Allocation(_)
            | Error::DegenerateNormalization(_)
            | Error::Unsupported(_) => 4,
            Error::Context { source, .. } => source.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::EmptyInput("x".into()).exit_code(), 3);
        assert_eq!(Error::Singular("x".into()).exit_code(), 4);
        let wrapped = Error::Fit("no".into()).context("DCC 2012-01-03");
        assert_eq!(wrapped.exit_code(), 4);
        assert!(wrapped.to_string().starts_with("DCC 2012-01-03"));
    }
}
