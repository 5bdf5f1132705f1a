use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{CliError, Result};

/// Parses the TOML config at `path`, or the defaults when there is none.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses a config that has no usable defaults.
pub fn load_required<T: DeserializeOwned>(path: Option<&Path>, command: &str) -> Result<T> {
    let path = path.ok_or_else(|| CliError::Config(format!("{command} needs --config")))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

pub fn positive(field: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(field_error(
            field,
            format!("must be finite and > 0, got {x}"),
        ))
    }
}

pub fn level(field: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(field_error(field, format!("must lie in (0, 1), got {x}")))
    }
}
