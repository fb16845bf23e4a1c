//! Exit-code discipline: 2 for argument errors, 1 for data errors.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exits 2 with the message.
    Usage(String),
    /// Bad input data; exits 1 with the offending location in the message.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub fn usage(msg: impl fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

pub fn data(msg: impl fmt::Display) -> CliError {
    CliError::Data(msg.to_string())
}
