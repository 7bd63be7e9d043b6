use std::fmt;

use waters_core::codec::CodecError;
use waters_core::data::DataError;
use waters_core::forecast::ForecastError;
use waters_core::netsim::SimError;

/// A failed invocation: the error name, its message and the exit status.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn domain(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "UsageError".into(),
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn io(context: &std::path::Path, err: impl fmt::Display) -> Self {
        Self::domain("IoError", format!("{}: {err}", context.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Module errors already start with their name.
        if self.message.starts_with(&self.kind) {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.kind, self.message)
        }
    }
}

macro_rules! from_module {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::domain(e.kind(), e.to_string())
            }
        }
    )*};
}

from_module!(CodecError, SimError, DataError, ForecastError);
