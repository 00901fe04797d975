//! Date-indexed daily series, date-intersection frames and the transforms
//! used to turn levels into daily changes.
//!
//! Changes always span consecutive *available* observations: a gap in the
//! calendar (weekend, holiday, missing print) is not adjusted for.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// End-of-day calendar date, timezone free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TradingDate(NaiveDate);

impl TradingDate {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(TradingDate)
    }

    pub fn year(self) -> i32 {
        self.0.year()
    }

    pub fn naive(self) -> NaiveDate {
        self.0
    }

    /// Next Monday-to-Friday date.
    pub fn next_weekday(self) -> Self {
        let mut d = self.0.succ_opt().expect("date overflow");
        while d.weekday().number_from_monday() > 5 {
            d = d.succ_opt().expect("date overflow");
        }
        TradingDate(d)
    }

    /// Days since 1970-01-01, used as a numeric axis.
    pub fn ordinal(self) -> i64 {
        (self.0 - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days()
    }
}

impl From<NaiveDate> for TradingDate {
    fn from(d: NaiveDate) -> Self {
        TradingDate(d)
    }
}

impl fmt::Display for TradingDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for TradingDate {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map(TradingDate)
    }
}

/// A named, strictly date-ordered series of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    name: String,
    dates: Vec<TradingDate>,
    values: Vec<f64>,
}

impl DailySeries {
    pub fn new(
        name: impl Into<String>,
        dates: Vec<TradingDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: format!("dates vs values of '{name}'"),
                expected: dates.len(),
                got: values.len(),
            });
        }
        for (i, (d, v)) in dates.iter().zip(&values).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    series: name,
                    date: *d,
                });
            }
            if i > 0 && dates[i - 1] >= *d {
                return Err(Error::Unordered {
                    series: name,
                    date: *d,
                });
            }
        }
        Ok(Self {
            name,
            dates,
            values,
        })
    }

    /// Builds a series from unordered points, sorting by date.
    pub fn from_points(
        name: impl Into<String>,
        mut points: Vec<(TradingDate, f64)>,
    ) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        let (dates, values) = points.into_iter().unzip();
        Self::new(name, dates, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dates(&self) -> &[TradingDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first_date(&self) -> Option<TradingDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<TradingDate> {
        self.dates.last().copied()
    }

    pub fn get(&self, date: TradingDate) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (TradingDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Keeps observations with `start <= date <= end`.
    pub fn window(&self, start: Option<TradingDate>, end: Option<TradingDate>) -> Self {
        let (dates, values) = self
            .iter()
            .filter(|(d, _)| start.map_or(true, |s| *d >= s) && end.map_or(true, |e| *d <= e))
            .unzip();
        Self {
            name: self.name.clone(),
            dates,
            values,
        }
    }

    fn pairwise(&self, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::InsufficientData {
                what: format!("{what} of '{}'", self.name),
                needed: 2,
                got: self.len(),
            });
        }
        let values = self.values.windows(2).map(|w| f(w[0], w[1])).collect();
        Self::new(self.name.clone(), self.dates[1..].to_vec(), values)
    }
}

/// `ln(x_t) - ln(x_{t-1})` over consecutive observations, dated at the later one.
pub fn log_return(s: &DailySeries) -> Result<DailySeries> {
    if let Some((date, value)) = s.iter().find(|(_, v)| *v <= 0.0) {
        return Err(Error::NonPositive {
            series: s.name.clone(),
            date,
            value,
        });
    }
    s.pairwise("log return", |a, b| b.ln() - a.ln())
}

/// `z_t - z_{t-1}` over consecutive observations, dated at the later one.
pub fn diff(s: &DailySeries) -> Result<DailySeries> {
    s.pairwise("difference", |a, b| b - a)
}

/// Daily change of a percent-quoted rate, in basis points.
pub fn to_bps_change(s: &DailySeries) -> Result<DailySeries> {
    s.pairwise("bps change", |a, b| (b - a) * 100.0)
}

/// Columns of equal length sharing one date index.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dates: Vec<TradingDate>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(dates: Vec<TradingDate>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, col) in &columns {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
            if col.len() != dates.len() {
                return Err(Error::LengthMismatch {
                    what: format!("column '{name}'"),
                    expected: dates.len(),
                    got: col.len(),
                });
            }
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema("frame dates must be strictly increasing".into()));
        }
        let (names, columns) = columns.into_iter().unzip();
        Ok(Self {
            dates,
            names,
            columns,
        })
    }

    pub fn dates(&self) -> &[TradingDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::Schema(format!("frame has no column '{name}'")))
    }

    pub fn series(&self, name: &str) -> Result<DailySeries> {
        DailySeries::new(name, self.dates.clone(), self.require(name)?.to_vec())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Subset of columns in the given order.
    pub fn select(&self, names: &[String]) -> Result<Frame> {
        let cols = names
            .iter()
            .map(|n| Ok((n.clone(), self.require(n)?.to_vec())))
            .collect::<Result<Vec<_>>>()?;
        Frame::new(self.dates.clone(), cols)
    }
}

/// Restricts every series to the dates common to all of them.
///
/// An empty intersection is a valid, zero-row frame.
pub fn inner_join(series: &[&DailySeries]) -> Result<Frame> {
    if series.is_empty() {
        return Err(Error::InsufficientData {
            what: "inner join".into(),
            needed: 1,
            got: 0,
        });
    }
    let mut seen = HashSet::new();
    for s in series {
        if !seen.insert(s.name()) {
            return Err(Error::DuplicateName(s.name().to_string()));
        }
    }
    let shortest = series.iter().min_by_key(|s| s.len()).unwrap();
    let dates: Vec<TradingDate> = shortest
        .dates()
        .iter()
        .copied()
        .filter(|d| series.iter().all(|s| s.dates().binary_search(d).is_ok()))
        .collect();
    let columns = series
        .iter()
        .map(|s| {
            let values = dates.iter().map(|d| s.get(*d).unwrap()).collect();
            (s.name().to_string(), values)
        })
        .collect();
    Frame::new(dates, columns)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n-1 denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Sample Pearson correlation; NaN when either input is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn cumsum(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Column means and sample standard deviations captured by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(frame: &Frame) -> Result<Self> {
        let cols: Vec<&[f64]> = frame.columns().iter().map(Vec::as_slice).collect();
        Self::from_columns(frame.names(), &cols)
    }

    pub fn from_columns(names: &[String], columns: &[&[f64]]) -> Result<Self> {
        let mut mean_v = Vec::with_capacity(columns.len());
        let mut std_v = Vec::with_capacity(columns.len());
        for (name, col) in names.iter().zip(columns) {
            if col.len() < 2 {
                return Err(Error::InsufficientData {
                    what: format!("standardization of '{name}'"),
                    needed: 2,
                    got: col.len(),
                });
            }
            let sd = sample_std(col);
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(Error::DegenerateColumn(name.clone()));
            }
            mean_v.push(mean(col));
            std_v.push(sd);
        }
        Ok(Self {
            columns: names.to_vec(),
            mean: mean_v,
            std: std_v,
        })
    }

    fn check_schema(&self, frame: &Frame) -> Result<()> {
        if frame.names() != self.columns.as_slice() {
            return Err(Error::Schema(format!(
                "expected columns {:?}, got {:?}",
                self.columns,
                frame.names()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, frame: &Frame) -> Result<Frame> {
        self.check_schema(frame)?;
        let cols = frame
            .names()
            .iter()
            .zip(frame.columns())
            .enumerate()
            .map(|(j, (n, c))| {
                let z = c.iter().map(|x| (x - self.mean[j]) / self.std[j]).collect();
                (n.clone(), z)
            })
            .collect();
        Frame::new(frame.dates().to_vec(), cols)
    }

    pub fn invert(&self, frame: &Frame) -> Result<Frame> {
        self.check_schema(frame)?;
        let cols = frame
            .names()
            .iter()
            .zip(frame.columns())
            .enumerate()
            .map(|(j, (n, c))| {
                let x = c.iter().map(|z| z * self.std[j] + self.mean[j]).collect();
                (n.clone(), x)
            })
            .collect();
        Frame::new(frame.dates().to_vec(), cols)
    }
}

/// Centers every column to mean 0 and scales it to sample std 1.
pub fn standardize(frame: &Frame) -> Result<(Frame, StandardizationParams)> {
    let params = StandardizationParams::fit(frame)?;
    let z = params.apply(frame)?;
    Ok((z, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(day: u32) -> TradingDate {
        TradingDate::from_ymd(2015, 1, day).unwrap()
    }

    fn series(name: &str, days: &[u32], values: &[f64]) -> DailySeries {
        DailySeries::new(name, days.iter().map(|x| d(*x)).collect(), values.to_vec()).unwrap()
    }

    #[test]
    fn log_return_constant_is_zero() {
        let s = series("x", &[1, 2, 5], &[100.0, 100.0, 100.0]);
        let r = log_return(&s).unwrap();
        assert_eq!(r.values(), &[0.0, 0.0]);
        assert_eq!(r.dates(), &[d(2), d(5)]);
    }

    #[test]
    fn log_return_ten_percent() {
        let s = series("x", &[1, 2], &[100.0, 110.0]);
        let r = log_return(&s).unwrap();
        // ln(1.1) to 20 significant digits
        assert!((r.values()[0] - 0.095_310_179_804_324_860_04).abs() < 1e-15);
    }

    #[test]
    fn log_return_rejects_zero_with_date() {
        let s = series("cds", &[1, 2, 3], &[100.0, 0.0, 1.0]);
        match log_return(&s) {
            Err(Error::NonPositive { date, .. }) => assert_eq!(date, d(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diff_examples() {
        let s = series("x", &[1, 2, 3], &[5.0, 5.0, 5.0]);
        assert_eq!(diff(&s).unwrap().values(), &[0.0, 0.0]);
        let selic = series("Selic_year", &[2, 5], &[13.85, 13.00]);
        assert!((diff(&selic).unwrap().values()[0] + 0.85).abs() < 1e-12);
        let one = series("x", &[1], &[1.0]);
        assert!(matches!(diff(&one), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn bps_change_examples() {
        let up = series("di", &[1, 2], &[13.25, 13.35]);
        assert!((to_bps_change(&up).unwrap().values()[0] - 10.0).abs() < 1e-9);
        let flat = series("di", &[1, 2], &[10.0, 10.0]);
        assert_eq!(to_bps_change(&flat).unwrap().values()[0], 0.0);
        let down = series("di", &[1, 2], &[12.0, 11.5]);
        assert!((to_bps_change(&down).unwrap().values()[0] + 50.0).abs() < 1e-9);
    }

    #[test]
    fn series_rejects_unordered_and_nan() {
        assert!(DailySeries::new("x", vec![d(2), d(1)], vec![1.0, 2.0]).is_err());
        assert!(DailySeries::new("x", vec![d(1), d(1)], vec![1.0, 2.0]).is_err());
        assert!(DailySeries::new("x", vec![d(1)], vec![f64::NAN]).is_err());
    }

    #[test]
    fn join_overlap_and_disjoint() {
        let a = series("a", &[1, 2, 3], &[1.0, 2.0, 3.0]);
        let b = series("b", &[2, 3, 4], &[20.0, 30.0, 40.0]);
        let f = inner_join(&[&a, &b]).unwrap();
        assert_eq!(f.dates(), &[d(2), d(3)]);
        assert_eq!(f.column("a").unwrap(), &[2.0, 3.0]);
        assert_eq!(f.column("b").unwrap(), &[20.0, 30.0]);

        let c = series("c", &[7, 8], &[1.0, 1.0]);
        let empty = inner_join(&[&a, &c]).unwrap();
        assert_eq!(empty.n_rows(), 0);
        assert_eq!(empty.n_cols(), 2);

        let same = inner_join(&[&a, &a.clone().renamed("a2")]).unwrap();
        assert_eq!(same.n_rows(), 3);
    }

    #[test]
    fn join_rejects_duplicate_names() {
        let a = series("a", &[1, 2], &[1.0, 2.0]);
        assert!(matches!(
            inner_join(&[&a, &a]),
            Err(Error::DuplicateName(_))
        ));
    }

    #[test]
    fn standardize_examples() {
        let f = Frame::new(vec![d(1), d(2), d(3)], vec![("x".into(), vec![1.0, 2.0, 3.0])]).unwrap();
        let (z, p) = standardize(&f).unwrap();
        assert_eq!(z.column("x").unwrap(), &[-1.0, 0.0, 1.0]);
        assert_eq!(p.mean, vec![2.0]);
        assert_eq!(p.std, vec![1.0]);

        let (zz, _) = standardize(&z).unwrap();
        for (a, b) in zz.column("x").unwrap().iter().zip(z.column("x").unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }

        let c = Frame::new(vec![d(1), d(2)], vec![("flat".into(), vec![4.0, 4.0])]).unwrap();
        match standardize(&c) {
            Err(Error::DegenerateColumn(name)) => assert_eq!(name, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn window_filters_inclusive() {
        let a = series("a", &[1, 2, 3, 4], &[1.0, 2.0, 3.0, 4.0]);
        let w = a.window(Some(d(2)), Some(d(3)));
        assert_eq!(w.dates(), &[d(2), d(3)]);
    }
}
