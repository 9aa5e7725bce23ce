use std::fmt;
use std::io;
use std::path::Path;

/// Process exit codes.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CAPABILITY: u8 = 3;
pub const EXIT_RANGE: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(tomonoise::Error),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn code(&self) -> u8 {
        use tomonoise::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e {
                E::Capability(_) | E::UnsupportedState(_) | E::AsymptoticDomain(_) => {
                    EXIT_CAPABILITY
                }
                E::Range(_) => EXIT_RANGE,
                E::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        use tomonoise::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Validation(_) => "validation",
                E::Domain(_) => "domain",
                E::Order { .. } => "order",
                E::Range(_) => "range",
                E::Argument(_) => "argument",
                E::Type(_) => "type",
                E::UnsupportedState(_) => "unsupported_state",
                E::Capability(_) => "capability",
                E::AsymptoticDomain(_) => "asymptotic_domain",
                E::Io(_) => "io",
                E::Parse(_) => "parse",
            },
        }
    }

    /// `error code=<n> kind=<kind> message=<json string>` on one line.
    pub fn report_line(&self) -> String {
        let message = match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        let quoted = serde_json::to_string(&message).unwrap_or_else(|_| "\"\"".into());
        format!(
            "error code={} kind={} message={quoted}",
            self.code(),
            self.kind()
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report_line())
    }
}

impl From<tomonoise::Error> for CliError {
    fn from(e: tomonoise::Error) -> Self {
        CliError::Core(e)
    }
}
