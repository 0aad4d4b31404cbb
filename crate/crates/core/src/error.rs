use thiserror::Error;

/// Broad failure classes. The CLI maps each class to an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Estimation,
    Inference,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter {param} = {value} is outside its domain ({domain})")]
    Domain {
        param: String,
        value: f64,
        domain: &'static str,
    },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("formula error in `{formula}`: {reason}")]
    Formula { formula: String, reason: String },

    #[error("variable `{0}` not found in data")]
    MissingVariable(String),

    #[error("non-finite values in `{variable}` at rows {rows:?}")]
    NonFinite { variable: String, rows: Vec<usize> },

    #[error("singular penalized system for parameter {param}, block `{block}`")]
    Singular { param: String, block: String },

    #[error("too few observations: {0}")]
    TooFewObservations(String),

    #[error("{functional} does not exist for this distribution: {reason}")]
    MomentDoesNotExist {
        functional: String,
        reason: String,
    },

    #[error("quadrature failed for {0}")]
    Quadrature(String),

    #[error("effect not identified: {0}")]
    NotIdentified(String),

    #[error("inference blocked: {0}")]
    InferenceBlocked(String),

    #[error("{arm} arm: {source}")]
    Arm {
        arm: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Unknown { .. } | Error::Formula { .. } => ErrorClass::Config,
            Error::InvalidInput(_)
            | Error::Domain { .. }
            | Error::MissingVariable(_)
            | Error::NonFinite { .. }
            | Error::TooFewObservations(_) => ErrorClass::Data,
            Error::Singular { .. }
            | Error::MomentDoesNotExist { .. }
            | Error::Quadrature(_)
            | Error::NotIdentified(_) => ErrorClass::Estimation,
            Error::InferenceBlocked(_) => ErrorClass::Inference,
            Error::Arm { source, .. } => source.class(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
