use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: line {line}: {msg}")]
    Row {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 config, 3 data, 4 numerical failure. I/O problems count as data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Row { .. } | CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<circdiff::Error> for CliError {
    fn from(e: circdiff::Error) -> Self {
        use circdiff::Error as E;
        match e {
            E::InvalidArgument(msg) => CliError::Config(msg),
            E::Data(msg) => CliError::Data(msg),
            E::DegenerateMean => CliError::Data(e.to_string()),
            E::FitFailure {
                ref best_params, ..
            } if best_params.is_empty() => CliError::Numerical(e.to_string()),
            E::FitFailure {
                ref best_params,
                best_value,
                ..
            } => CliError::Numerical(format!(
                "{e} (best iterate {best_params:?}, objective {best_value})"
            )),
            E::NearSingularTime { .. }
            | E::SolverFailure(_)
            | E::SingularCovariance { .. }
            | E::Bootstrap { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
