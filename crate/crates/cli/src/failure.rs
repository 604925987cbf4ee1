use std::fmt;

use lgwitness::Error;

/// Process exit status by failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Config = 2,
    Ingestion = 3,
    Capacity = 4,
    Integrity = 5,
    Io = 6,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub message: String,
    pub io_kind: Option<std::io::ErrorKind>,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: Code::Config,
            message: message.into(),
            io_kind: None,
        }
    }

    pub fn integrity(message: impl Into<String>) -> Self {
        Self {
            code: Code::Integrity,
            message: message.into(),
            io_kind: None,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let io_kind = match &e {
            Error::Io(io) => Some(io.kind()),
            Error::Json(j) => j.io_error_kind(),
            Error::Csv(c) => match c.kind() {
                csv::ErrorKind::Io(io) => Some(io.kind()),
                _ => None,
            },
            _ => None,
        };
        let code = match &e {
            _ if io_kind.is_some() => Code::Io,
            Error::InvalidModeSet(_)
            | Error::InvalidState(_)
            | Error::Domain(_)
            | Error::Quadrature { .. } => Code::Config,
            Error::Ingestion(_) | Error::MissingPair(..) | Error::Json(_) | Error::Csv(_) => {
                Code::Ingestion
            }
            Error::Capacity { .. } => Code::Capacity,
            Error::Integrity(_) => Code::Integrity,
            Error::Io(_) => Code::Io,
        };
        Self {
            code,
            message: e.to_string(),
            io_kind,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: Code::Io,
            message: e.to_string(),
            io_kind: Some(e.kind()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e).into()
    }
}

pub type CliResult<T> = Result<T, Failure>;
