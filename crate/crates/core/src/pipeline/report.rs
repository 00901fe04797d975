//! Run report and the plain-text summary printed after a run.

use std::fmt::Write as _;

use serde::Serialize;

use crate::decomposition::{CumulativeSnapshot, RegressionTable, StdTable, VarianceShares};
use crate::ingestion::focus::LoadReport;
use crate::ingestion::market::CsvLoadReport;
use crate::series::TradingDate;

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for Software {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplePeriod {
    pub requested_start: TradingDate,
    pub requested_end: TradingDate,
    pub first: TradingDate,
    pub last: TradingDate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulativeSummary {
    pub peak: CumulativeSnapshot,
    pub trough: CumulativeSnapshot,
    pub end: CumulativeSnapshot,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadCounts {
    pub market: Vec<CsvLoadReport>,
    pub focus: Option<LoadReport>,
    /// Survey dates lacking a full set of horizon cells.
    pub horizon_rows_dropped: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MacroSummary {
    pub columns: Vec<String>,
    pub n_observations: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdsSummary {
    pub alpha: f64,
    pub gamma: [f64; 4],
    pub r_squared: f64,
    pub n_observations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub software: Software,
    pub sample: SamplePeriod,
    /// Rows of the joined decomposition frame.
    pub n_observations: usize,
    pub regression: RegressionTable,
    pub std_table: StdTable,
    pub variance_shares: VarianceShares,
    pub cumulative: CumulativeSummary,
    pub macro_factor: Option<MacroSummary>,
    pub cds_split: Option<CdsSummary>,
    pub loads: LoadCounts,
    pub config: serde_json::Value,
}

fn bps(v: f64) -> String {
    let s = format!("{v:+.1}");
    if s == "-0.0" {
        "+0.0".into()
    } else {
        s
    }
}

fn snapshot_line(out: &mut String, label: &str, s: &CumulativeSnapshot) {
    writeln!(
        out,
        "  {label:<6} {}  total {:>8}  const {:>8}  macro {:>8}  riscobr {:>8}  global {:>8}  residual {:>8}",
        s.date,
        bps(s.di5y_change_cum),
        bps(s.const_cum),
        bps(s.macro_cum),
        bps(s.riscobr_cum),
        bps(s.global_cum),
        bps(s.residual_cum)
    )
    .unwrap();
}

impl RunReport {
    /// Human-readable summary; bps figures rounded to one decimal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "Sample {} to {} ({} observations)",
            self.sample.first, self.sample.last, self.n_observations
        )
        .unwrap();
        writeln!(
            out,
            "{:<22} {:>14} {:>12} {:>9} {:>10}  Significance",
            "Variable", "Coefficient", "Std. error", "t", "p-value"
        )
        .unwrap();
        for r in &self.regression.coefficients {
            writeln!(
                out,
                "{:<22} {:>14.6} {:>12.6} {:>9.3} {:>10.4}  {}",
                r.variable, r.value, r.std_error, r.t_statistic, r.p_value, r.significance
            )
            .unwrap();
        }
        writeln!(
            out,
            "R² {:.6}  adj. R² {:.6}",
            self.regression.r_squared, self.regression.adj_r_squared
        )
        .unwrap();
        let v = &self.variance_shares;
        writeln!(
            out,
            "Variance shares: {} {:.1}%  {} {:.1}%  {} {:.1}%",
            v.names[0],
            100.0 * v.shares[0],
            v.names[1],
            100.0 * v.shares[1],
            v.names[2],
            100.0 * v.shares[2]
        )
        .unwrap();
        writeln!(out, "Cumulative contributions (bps):").unwrap();
        snapshot_line(&mut out, "peak", &self.cumulative.peak);
        snapshot_line(&mut out, "trough", &self.cumulative.trough);
        snapshot_line(&mut out, "end", &self.cumulative.end);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bps_formatting() {
        assert_eq!(bps(449.0), "+449.0");
        assert_eq!(bps(-802.04), "-802.0");
        assert_eq!(bps(-0.01), "+0.0");
    }
}
