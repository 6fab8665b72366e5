use std::fmt;

/// A failure with its process exit code: 2 for bad input, 3 for numerics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const INPUT: u8 = 2;
    pub const NUMERICAL: u8 = 3;

    pub fn input(message: impl Into<String>) -> Self {
        Self { code: Self::INPUT, message: message.into() }
    }
}

impl From<midcurve_core::Error> for CliError {
    fn from(e: midcurve_core::Error) -> Self {
        let code = if e.is_numerical() { Self::NUMERICAL } else { Self::INPUT };
        Self { code, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
