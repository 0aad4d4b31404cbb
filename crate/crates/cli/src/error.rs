use distreg::{Error, ErrorClass};

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Data, message: message.into() }
    }

    /// 2 config, 3 data, 4 estimation, 5 inference blocked.
    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Estimation => 4,
            ErrorClass::Inference => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { class: e.class(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
