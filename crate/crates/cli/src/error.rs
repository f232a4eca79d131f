use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration file is missing, malformed or inconsistent.
    #[error("config: {0}")]
    Config(String),
    /// An input file or directory could not be used.
    #[error("input: {0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for configuration and input problems, 1 for failures during the run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// Wraps a core error raised while validating the config section `section`.
    pub fn at(section: &str, e: partsim_core::Error) -> Self {
        match e {
            partsim_core::Error::Parameter { field, reason } => CliError::Config(format!("{section}.{field}: {reason}")),
            other => CliError::Config(format!("{section}: {other}")),
        }
    }
}

impl From<partsim_core::Error> for CliError {
    fn from(e: partsim_core::Error) -> Self {
        if let partsim_core::Error::Config(msg) = &e {
            return CliError::Config(msg.clone());
        }
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}
