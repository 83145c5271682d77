use std::fmt;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameter values: exit 1.
    Config(String),
    /// Unreadable or unwritable files, malformed input data: exit 2.
    Io(String),
    /// The OCR command failed or timed out: exit 3.
    External(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::External(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::External(m) => write!(f, "OCR command: {m}"),
        }
    }
}

impl From<ovtext::Error> for CliError {
    fn from(e: ovtext::Error) -> Self {
        use ovtext::Error::*;
        match e {
            Config(m) => CliError::Config(m),
            InvalidParameter(_) => CliError::Config(e.to_string()),
            CommandFailed { .. } | CommandTimeout(_) => CliError::External(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
