use std::fmt;
use std::process::ExitCode;

pub const USAGE: u8 = 2;
pub const WARNINGS: u8 = 3;
pub const ESTIMATION: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<regimekit::Error> for CliError {
    fn from(e: regimekit::Error) -> Self {
        let code = match e {
            regimekit::Error::Estimation(_) => ESTIMATION,
            _ => USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
