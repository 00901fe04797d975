//! Wide, date-first CSV files: market levels and intermediate factor series.
//!
//! Contract: header row, first column `date` (ISO-8601), one column per
//! series, UTF-8, point decimal, LF or CRLF. An empty cell means the series
//! has no observation on that date.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DailySeries, TradingDate};

pub const DI5Y: &str = "DI5Y";
pub const CDS: &str = "CDS";
pub const DXY: &str = "DXY";
pub const CRB: &str = "CRB";
pub const VIX: &str = "VIX";
pub const UST10: &str = "UST10";
pub const SURPRISE: &str = "SURPRISE";

pub const MARKET_ROSTER: [&str; 7] = [DI5Y, CDS, DXY, CRB, VIX, UST10, SURPRISE];

/// Which columns a file must carry and which it may carry.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub required: Vec<String>,
    /// `None` accepts any extra column.
    pub allowed: Option<Vec<String>>,
}

impl CsvSchema {
    /// Market files: any subset of the roster, at least the given columns.
    pub fn market(required: &[&str]) -> Self {
        Self {
            required: required.iter().map(|s| s.to_string()).collect(),
            allowed: Some(MARKET_ROSTER.iter().map(|s| s.to_string()).collect()),
        }
    }

    pub fn exact(columns: &[&str]) -> Self {
        let cols: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
        Self {
            required: cols.clone(),
            allowed: Some(cols),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvLoadReport {
    pub path: PathBuf,
    pub rows: usize,
    pub rejected: Vec<RejectedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

/// Named daily series loaded from one or more files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarketDataset {
    series: BTreeMap<String, DailySeries>,
}

impl MarketDataset {
    pub fn from_series(series: Vec<DailySeries>) -> Result<Self> {
        let mut out = Self::default();
        for s in series {
            out.insert(s)?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, s: DailySeries) -> Result<()> {
        if self.series.contains_key(s.name()) {
            return Err(Error::DuplicateName(s.name().to_string()));
        }
        self.series.insert(s.name().to_string(), s);
        Ok(())
    }

    pub fn merge(&mut self, other: MarketDataset) -> Result<()> {
        for (_, s) in other.series {
            self.insert(s)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&DailySeries> {
        self.series.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&DailySeries> {
        self.get(name)
            .ok_or_else(|| Error::Schema(format!("market data has no series '{name}'")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn series(&self) -> impl Iterator<Item = &DailySeries> {
        self.series.values()
    }
}

/// Reads a wide CSV into one series per non-date column.
///
/// In strict mode any rejected row fails the load; otherwise rejected rows
/// are skipped and listed in the report.
pub fn read_wide_csv(
    path: &Path,
    schema: &CsvSchema,
    strict: bool,
) -> Result<(Vec<DailySeries>, CsvLoadReport)> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();

    if header.first().map(String::as_str) != Some("date") {
        return Err(csv_err("first header column must be 'date'".into()));
    }
    let columns = &header[1..];
    let mut seen = HashSet::new();
    for c in columns {
        if !seen.insert(c.as_str()) {
            return Err(csv_err(format!("duplicate header column '{c}'")));
        }
        if let Some(allowed) = &schema.allowed {
            if !allowed.contains(c) {
                return Err(csv_err(format!(
                    "unexpected header column '{c}' (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
    }
    for r in &schema.required {
        if !columns.contains(r) {
            return Err(csv_err(format!("missing required column '{r}'")));
        }
    }

    let mut report = CsvLoadReport {
        path: path.to_path_buf(),
        ..CsvLoadReport::default()
    };
    let mut rows: Vec<(TradingDate, Vec<Option<f64>>)> = Vec::new();
    let mut dates_seen = HashSet::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        report.rows += 1;
        match parse_row(&row, columns.len()) {
            Ok((date, values)) => {
                if !dates_seen.insert(date) {
                    report.rejected.push(RejectedRow {
                        line,
                        reason: format!("duplicate date {date}"),
                    });
                } else {
                    rows.push((date, values));
                }
            }
            Err(reason) => report.rejected.push(RejectedRow { line, reason }),
        }
    }

    if !report.rejected.is_empty() {
        if strict {
            return Err(Error::RejectedRows {
                path: path.to_path_buf(),
                count: report.rejected.len(),
                lines: report
                    .rejected
                    .iter()
                    .map(|r| (r.line, r.reason.clone()))
                    .collect(),
            });
        }
        for r in &report.rejected {
            log::warn!("{}: skipping line {}: {}", path.display(), r.line, r.reason);
        }
    }

    rows.sort_by_key(|r| r.0);
    let series = columns
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let points = rows
                .iter()
                .filter_map(|(d, vals)| vals[j].map(|v| (*d, v)))
                .collect();
            DailySeries::from_points(name.clone(), points)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((series, report))
}

fn parse_row(row: &csv::StringRecord, n_values: usize) -> std::result::Result<(TradingDate, Vec<Option<f64>>), String> {
    if row.len() != n_values + 1 {
        return Err(format!("expected {} fields, found {}", n_values + 1, row.len()));
    }
    let date: TradingDate = row[0]
        .parse()
        .map_err(|_| format!("invalid date '{}'", &row[0]))?;
    let values = row
        .iter()
        .skip(1)
        .map(|cell| {
            if cell.is_empty() {
                return Ok(None);
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(format!("invalid number '{cell}'")),
            }
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    Ok((date, values))
}

pub fn load_market_csv(
    path: &Path,
    schema: &CsvSchema,
    strict: bool,
) -> Result<(MarketDataset, CsvLoadReport)> {
    let (series, report) = read_wide_csv(path, schema, strict)?;
    Ok((MarketDataset::from_series(series)?, report))
}

/// Writes series side by side over the union of their dates. Values use the
/// shortest representation that parses back to the same `f64`, or a fixed
/// number of decimals when `decimals` is given.
pub fn write_wide_csv(path: &Path, series: &[&DailySeries], decimals: Option<usize>) -> Result<()> {
    let mut dates: Vec<TradingDate> = series.iter().flat_map(|s| s.dates().iter().copied()).collect();
    dates.sort_unstable();
    dates.dedup();
    let mut out = String::from("date");
    for s in series {
        out.push(',');
        out.push_str(s.name());
    }
    out.push('\n');
    let mut cursors = vec![0usize; series.len()];
    for d in dates {
        write!(out, "{d}").unwrap();
        for (s, cur) in series.iter().zip(cursors.iter_mut()) {
            out.push(',');
            if *cur < s.len() && s.dates()[*cur] == d {
                out.push_str(&format_value(s.values()[*cur], decimals));
                *cur += 1;
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn format_value(v: f64, decimals: Option<usize>) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    match decimals {
        Some(p) => {
            let s = format!("{v:.p$}");
            // avoid "-0.0000"
            if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
                s[1..].to_string()
            } else {
                s
            }
        }
        None => format!("{v}"),
    }
}
