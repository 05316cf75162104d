use std::fmt;

/// Failure classes mapped to process exit codes: input and usage problems
/// exit with 2, numerical or degenerate outcomes with 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Numerical(msg) => f.write_str(msg),
        }
    }
}

impl From<foreca::Error> for CliError {
    fn from(err: foreca::Error) -> Self {
        if err.is_input_error() {
            CliError::Input(err.to_string())
        } else {
            CliError::Numerical(err.to_string())
        }
    }
}
