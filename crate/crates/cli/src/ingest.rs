//! CSV readers for angle series and price series. Every row error names its
//! 1-based line in the file (the header is line 1).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use circdiff::circular::{wrap, Angle};
use circdiff::AngularPath64;

use crate::error::{CliError, Result};
use crate::Units;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Stamp {
    /// Plain number, already in time units.
    Number(f64),
    DateTime(NaiveDateTime),
}

impl Stamp {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(x) = s.parse::<f64>() {
            return x.is_finite().then_some(Stamp::Number(x));
        }
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return d.and_hms_opt(0, 0, 0).map(Stamp::DateTime);
        }
        if let Ok(t) = chrono::DateTime::parse_from_rfc3339(s) {
            return Some(Stamp::DateTime(t.naive_utc()));
        }
        [
            "%Y-%m-%dT%H:%M:%S%.f",
            "%Y-%m-%d %H:%M:%S%.f",
            "%Y-%m-%dT%H:%M",
        ]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(Stamp::DateTime)
    }

    /// Elapsed time since `origin`: numbers subtract, dates count days.
    fn since(&self, origin: &Stamp) -> Option<f64> {
        match (self, origin) {
            (Stamp::Number(a), Stamp::Number(b)) => Some(a - b),
            (Stamp::DateTime(a), Stamp::DateTime(b)) => {
                let d = *a - *b;
                Some(d.num_milliseconds() as f64 / 86_400_000.0)
            }
            _ => None,
        }
    }
}

impl std::fmt::Display for Stamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stamp::Number(x) => write!(f, "{x}"),
            Stamp::DateTime(t) if t.time() == chrono::NaiveTime::MIN => write!(f, "{}", t.date()),
            Stamp::DateTime(t) => write!(f, "{}", t.format("%Y-%m-%dT%H:%M:%S")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AngleSeries {
    pub stamps: Vec<Stamp>,
    pub angles: Vec<Angle<f64>>,
    /// Units the file was read in.
    pub units: Units,
}

impl AngleSeries {
    /// Observation times relative to the first stamp (days for dates), or a
    /// uniform grid of spacing `dt` when given.
    pub fn path(&self, dt: Option<f64>) -> Result<AngularPath64> {
        let times: Vec<f64> = match dt {
            Some(dt) => (0..self.angles.len()).map(|i| dt * i as f64).collect(),
            None => self
                .stamps
                .iter()
                .map(|s| s.since(&self.stamps[0]).unwrap_or(f64::NAN))
                .collect(),
        };
        Ok(AngularPath64::new(times, self.angles.clone())?)
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::Data(format!("{}: {other:?}", path.display())),
        })
}

fn row_error(path: &Path, line: u64, msg: impl Into<String>) -> CliError {
    CliError::Row {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn records(
    path: &Path,
    columns: usize,
) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = reader(path)?;
    let header = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() != columns {
        return Err(row_error(
            path,
            1,
            format!(
                "expected a header with {columns} columns, found {}",
                header.len()
            ),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec
            .map_err(|e| row_error(path, e.position().map_or(line, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(line, |p| p.line());
        if rec.len() != columns || rec.iter().any(str::is_empty) {
            return Err(row_error(
                path,
                line,
                format!(
                    "expected {columns} non-empty cells, found {:?}",
                    rec.iter().collect::<Vec<_>>()
                ),
            ));
        }
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn stamp(path: &Path, line: u64, cell: &str, previous: Option<&Stamp>) -> Result<Stamp> {
    let s = Stamp::parse(cell)
        .ok_or_else(|| row_error(path, line, format!("unreadable timestamp {cell:?}")))?;
    if let Some(p) = previous {
        match s.since(p) {
            None => return Err(row_error(path, line, "timestamps mix numbers and dates")),
            Some(d) if d <= 0.0 => {
                return Err(row_error(
                    path,
                    line,
                    format!("timestamp {s} does not increase"),
                ))
            }
            _ => {}
        }
    }
    Ok(s)
}

/// Units named by the angle column header, if it is one of the standard names.
fn header_units(name: &str) -> Option<Units> {
    match name {
        "angle_radians" => Some(Units::Radians),
        "angle_degrees" => Some(Units::Degrees),
        _ => None,
    }
}

/// Reads `timestamp,angle` rows. A header of `angle_radians` or
/// `angle_degrees` fixes the units; otherwise `units` applies. An explicit
/// `units` that contradicts the header is an error.
pub fn read_angle_series(path: &Path, units: Option<Units>) -> Result<AngleSeries> {
    let (header, rows) = records(path, 2)?;
    let units = match (header_units(&header[1]), units) {
        (Some(h), Some(u)) if h != u => {
            return Err(row_error(
                path,
                1,
                format!("header says {h} but --units {u} was given"),
            ));
        }
        (Some(h), _) => h,
        (None, u) => u.unwrap_or(Units::Radians),
    };
    let mut stamps: Vec<Stamp> = Vec::with_capacity(rows.len());
    let mut angles = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        stamps.push(stamp(path, line, &rec[0], stamps.last())?);
        let x: f64 = rec[1]
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| {
                row_error(
                    path,
                    line,
                    format!("angle {:?} is not a finite number", &rec[1]),
                )
            })?;
        angles.push(wrap(units.to_radians(x)).map_err(|e| row_error(path, line, e.to_string()))?);
    }
    if angles.len() < 3 {
        return Err(CliError::Data(format!(
            "{}: need at least 3 observations, found {}",
            path.display(),
            angles.len()
        )));
    }
    Ok(AngleSeries {
        stamps,
        angles,
        units,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub stamps: Vec<Stamp>,
    pub prices1: Vec<f64>,
    pub prices2: Vec<f64>,
}

fn price(path: &Path, line: u64, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|p| p.is_finite() && *p > 0.0)
        .ok_or_else(|| {
            row_error(
                path,
                line,
                format!("price {cell:?} is not a positive number"),
            )
        })
}

/// Reads `date,price1,price2` rows.
pub fn read_price_series(path: &Path) -> Result<PriceSeries> {
    let (header, rows) = records(path, 3)?;
    if price(path, 1, &header[1]).is_ok() {
        return Err(row_error(path, 1, "a header row is required"));
    }
    let mut out = PriceSeries {
        stamps: Vec::with_capacity(rows.len()),
        prices1: Vec::with_capacity(rows.len()),
        prices2: Vec::with_capacity(rows.len()),
    };
    for (line, rec) in rows {
        out.stamps
            .push(stamp(path, line, &rec[0], out.stamps.last())?);
        out.prices1.push(price(path, line, &rec[1])?);
        out.prices2.push(price(path, line, &rec[2])?);
    }
    Ok(out)
}

fn read_single_prices(path: &Path) -> Result<BTreeMap<String, (Stamp, f64)>> {
    let (header, rows) = records(path, 2)?;
    if price(path, 1, &header[1]).is_ok() {
        return Err(row_error(path, 1, "a header row is required"));
    }
    let mut out = BTreeMap::new();
    let mut previous: Option<Stamp> = None;
    for (line, rec) in rows {
        let s = stamp(path, line, &rec[0], previous.as_ref())?;
        previous = Some(s);
        out.insert(s.to_string(), (s, price(path, line, &rec[1])?));
    }
    Ok(out)
}

/// Reads two `date,price` files and keeps the dates present in both.
pub fn read_price_pair(first: &Path, second: &Path) -> Result<PriceSeries> {
    let a = read_single_prices(first)?;
    let b = read_single_prices(second)?;
    let mut joined: Vec<(Stamp, f64, f64)> = a
        .iter()
        .filter_map(|(k, &(s, p))| b.get(k).map(|&(_, q)| (s, p, q)))
        .collect();
    joined.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(PriceSeries {
        stamps: joined.iter().map(|j| j.0).collect(),
        prices1: joined.iter().map(|j| j.1).collect(),
        prices2: joined.iter().map(|j| j.2).collect(),
    })
}
