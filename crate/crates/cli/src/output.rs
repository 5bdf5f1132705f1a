use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

pub const FIT_CIRCULAR_SCHEMA: &str = "circdiff.fit-circular/1";
pub const FIT_STOCHCORR_SCHEMA: &str = "circdiff.fit-stochcorr/1";

/// A file at `path`, or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path)?))
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e))
}

pub fn csv_error(e: csv::Error) -> CliError {
    CliError::Data(format!("writing CSV: {e}"))
}

/// Linear interpolation between order statistics of a sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
