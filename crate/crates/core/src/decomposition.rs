//! Basis-point attribution of daily DI changes and its cumulative accounting.
//!
//! The change in bps is regressed on the macro factor and the two CDS
//! components. Each day splits exactly into
//! `const + macro + riscobr + global + residual`, and running sums of those
//! pieces add up to the running sum of the change.

use serde::{Deserialize, Serialize};

use crate::cds::{CDS_DOM, CDS_GLOB};
use crate::error::{Error, Result};
use crate::pls::MACRO_FACTOR;
use crate::regression::{ols_fit, OlsFit};
use crate::series::{correlation, inner_join, sample_std, sample_variance, DailySeries, Frame, TradingDate};

pub const D_DI5Y: &str = "dDI5Y_bps";

/// Tolerance of the per-day identity, in bps.
pub const DAILY_IDENTITY_TOL: f64 = 1e-9;
/// Tolerance of the cumulative identity, in bps.
pub const CUMULATIVE_IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionModel {
    pub beta0: f64,
    pub beta_macro: f64,
    pub beta_dom: f64,
    pub beta_glob: f64,
    pub fit: OlsFit,
}

/// Inner join of the target and the three factors, in the column order the
/// model expects.
pub fn join_inputs(
    d_di5y: &DailySeries,
    macro_factor: &DailySeries,
    cds_dom: &DailySeries,
    cds_glob: &DailySeries,
) -> Result<Frame> {
    let named = [
        d_di5y.clone().renamed(D_DI5Y),
        macro_factor.clone().renamed(MACRO_FACTOR),
        cds_dom.clone().renamed(CDS_DOM),
        cds_glob.clone().renamed(CDS_GLOB),
    ];
    let refs: Vec<&DailySeries> = named.iter().collect();
    inner_join(&refs)
}

pub fn fit_decomposition(
    d_di5y: &DailySeries,
    macro_factor: &DailySeries,
    cds_dom: &DailySeries,
    cds_glob: &DailySeries,
) -> Result<DecompositionModel> {
    fit_joined(&join_inputs(d_di5y, macro_factor, cds_dom, cds_glob)?)
}

/// Fits on an already-joined frame carrying the four named columns.
pub fn fit_joined(joined: &Frame) -> Result<DecompositionModel> {
    if joined.n_rows() == 0 {
        return Err(Error::InsufficientData {
            what: "decomposition (join produced 0 rows)".into(),
            needed: 5,
            got: 0,
        });
    }
    let y = joined.require(D_DI5Y)?;
    let x = joined.select(&[MACRO_FACTOR.into(), CDS_DOM.into(), CDS_GLOB.into()])?;
    let fit = ols_fit(y, &x, true)?;
    Ok(DecompositionModel {
        beta0: fit.coefficients[0],
        beta_macro: fit.coefficients[1],
        beta_dom: fit.coefficients[2],
        beta_glob: fit.coefficients[3],
        fit,
    })
}

/// Daily bps contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionFrame {
    pub dates: Vec<TradingDate>,
    pub d_di5y: Vec<f64>,
    pub constant: Vec<f64>,
    pub macro_contrib: Vec<f64>,
    pub riscobr_contrib: Vec<f64>,
    pub global_contrib: Vec<f64>,
    pub residual: Vec<f64>,
}

impl ContributionFrame {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Largest absolute gap in `d = const + macro + riscobr + global + residual`.
    pub fn max_identity_error(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let parts = self.constant[i]
                    + self.macro_contrib[i]
                    + self.riscobr_contrib[i]
                    + self.global_contrib[i]
                    + self.residual[i];
                (self.d_di5y[i] - parts).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn fitted_ex_const(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.macro_contrib[i] + self.riscobr_contrib[i] + self.global_contrib[i])
            .collect()
    }
}

pub fn contributions(model: &DecompositionModel, joined: &Frame) -> Result<ContributionFrame> {
    let d = joined.require(D_DI5Y)?;
    let m = joined.require(MACRO_FACTOR)?;
    let dom = joined.require(CDS_DOM)?;
    let glob = joined.require(CDS_GLOB)?;
    let n = joined.n_rows();

    let macro_contrib: Vec<f64> = m.iter().map(|v| model.beta_macro * v).collect();
    let riscobr_contrib: Vec<f64> = dom.iter().map(|v| model.beta_dom * v).collect();
    let global_contrib: Vec<f64> = glob.iter().map(|v| model.beta_glob * v).collect();
    let residual = (0..n)
        .map(|i| d[i] - (model.beta0 + macro_contrib[i] + riscobr_contrib[i] + global_contrib[i]))
        .collect();

    Ok(ContributionFrame {
        dates: joined.dates().to_vec(),
        d_di5y: d.to_vec(),
        constant: vec![model.beta0; n],
        macro_contrib,
        riscobr_contrib,
        global_contrib,
        residual,
    })
}

/// Running sums of every contribution column.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeFrame {
    pub dates: Vec<TradingDate>,
    pub di5y_change_cum: Vec<f64>,
    pub const_cum: Vec<f64>,
    pub macro_cum: Vec<f64>,
    pub riscobr_cum: Vec<f64>,
    pub global_cum: Vec<f64>,
    pub residual_cum: Vec<f64>,
}

/// One row of the cumulative frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeSnapshot {
    pub date: TradingDate,
    pub di5y_change_cum: f64,
    pub const_cum: f64,
    pub macro_cum: f64,
    pub riscobr_cum: f64,
    pub global_cum: f64,
    pub residual_cum: f64,
}

impl CumulativeSnapshot {
    pub fn components(&self) -> [f64; 5] {
        [
            self.const_cum,
            self.macro_cum,
            self.riscobr_cum,
            self.global_cum,
            self.residual_cum,
        ]
    }
}

impl CumulativeFrame {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn snapshot(&self, i: usize) -> CumulativeSnapshot {
        CumulativeSnapshot {
            date: self.dates[i],
            di5y_change_cum: self.di5y_change_cum[i],
            const_cum: self.const_cum[i],
            macro_cum: self.macro_cum[i],
            riscobr_cum: self.riscobr_cum[i],
            global_cum: self.global_cum[i],
            residual_cum: self.residual_cum[i],
        }
    }

    pub fn last(&self) -> Option<CumulativeSnapshot> {
        (!self.is_empty()).then(|| self.snapshot(self.len() - 1))
    }

    /// Rows where the cumulative change peaks and bottoms out.
    pub fn extremes(&self) -> Option<(CumulativeSnapshot, CumulativeSnapshot)> {
        if self.is_empty() {
            return None;
        }
        let mut hi = 0;
        let mut lo = 0;
        for (i, v) in self.di5y_change_cum.iter().enumerate() {
            if *v > self.di5y_change_cum[hi] {
                hi = i;
            }
            if *v < self.di5y_change_cum[lo] {
                lo = i;
            }
        }
        Some((self.snapshot(hi), self.snapshot(lo)))
    }

    /// Checks the cumulative identity on every row.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.len() {
            let s = self.snapshot(i);
            check_row_sum(s.di5y_change_cum, &s.components(), tol).map_err(|e| match e {
                Error::Identity(m) => Error::Identity(format!("{} on {}", m, s.date)),
                e => e,
            })?;
        }
        Ok(())
    }
}

/// Verifies that `components` add up to `total` within `tol`.
pub fn check_row_sum(total: f64, components: &[f64], tol: f64) -> Result<()> {
    let sum: f64 = components.iter().sum();
    if (sum - total).abs() <= tol && sum.is_finite() {
        Ok(())
    } else {
        Err(Error::Identity(format!(
            "components sum to {sum}, expected {total} (tolerance {tol})"
        )))
    }
}

fn running_sum(xs: &[f64]) -> Vec<f64> {
    crate::series::cumsum(xs)
}

pub fn accumulate(c: &ContributionFrame) -> CumulativeFrame {
    let beta0 = c.constant.first().copied().unwrap_or(0.0);
    CumulativeFrame {
        dates: c.dates.clone(),
        di5y_change_cum: running_sum(&c.d_di5y),
        const_cum: (1..=c.len()).map(|t| beta0 * t as f64).collect(),
        macro_cum: running_sum(&c.macro_contrib),
        riscobr_cum: running_sum(&c.riscobr_contrib),
        global_cum: running_sum(&c.global_contrib),
        residual_cum: running_sum(&c.residual),
    }
}

/// Share of each factor contribution in the fitted (ex-constant) variance,
/// computed as if the contributions were mutually uncorrelated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceShares {
    pub names: [&'static str; 3],
    pub variances: [f64; 3],
    pub shares: [f64; 3],
    /// Pairwise correlations between contributions; NaN where one is constant.
    pub correlation: [[f64; 3]; 3],
}

pub const CONTRIBUTION_NAMES: [&str; 3] = ["MacroBR", "RiscoBR", "Global"];

pub fn variance_shares(c: &ContributionFrame) -> Result<VarianceShares> {
    if c.len() < 2 {
        return Err(Error::InsufficientData {
            what: "variance shares".into(),
            needed: 2,
            got: c.len(),
        });
    }
    let cols = [&c.macro_contrib, &c.riscobr_contrib, &c.global_contrib];
    let variances = cols.map(|v| sample_variance(v));
    let total: f64 = variances.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all factor contributions are constant".into()));
    }
    let shares = variances.map(|v| v / total);
    let mut corr = [[1.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                corr[i][j] = correlation(cols[i], cols[j]);
            } else if variances[i] == 0.0 {
                corr[i][j] = f64::NAN;
            }
        }
    }
    Ok(VarianceShares {
        names: CONTRIBUTION_NAMES,
        variances,
        shares,
        correlation: corr,
    })
}

/// Daily standard deviations (bps) of the change and its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StdTable {
    pub d_di5y: f64,
    pub macro_contrib: f64,
    pub riscobr_contrib: f64,
    pub global_contrib: f64,
    pub residual: f64,
    pub fitted: f64,
}

pub fn std_table(c: &ContributionFrame) -> Result<StdTable> {
    if c.len() < 2 {
        return Err(Error::InsufficientData {
            what: "standard deviation table".into(),
            needed: 2,
            got: c.len(),
        });
    }
    Ok(StdTable {
        d_di5y: sample_std(&c.d_di5y),
        macro_contrib: sample_std(&c.macro_contrib),
        riscobr_contrib: sample_std(&c.riscobr_contrib),
        global_contrib: sample_std(&c.global_contrib),
        residual: sample_std(&c.residual),
        fitted: sample_std(&c.fitted_ex_const()),
    })
}

/// p-value cut-offs for the significance column of the regression table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignificanceThresholds {
    pub highly: f64,
    pub significant: f64,
    pub weak: f64,
}

impl Default for SignificanceThresholds {
    fn default() -> Self {
        Self {
            highly: 0.001,
            significant: 0.01,
            weak: 0.05,
        }
    }
}

impl SignificanceThresholds {
    pub fn label(&self, p: f64) -> &'static str {
        if p < self.highly {
            "Highly Significant"
        } else if p < self.significant {
            "Significant"
        } else if p < self.weak {
            "Weak"
        } else {
            "Not significant"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub variable: String,
    pub symbol: String,
    pub value: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub significance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionTable {
    pub coefficients: Vec<CoefficientRow>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n_observations: usize,
}

impl DecompositionModel {
    pub fn table(&self, thresholds: &SignificanceThresholds) -> RegressionTable {
        let labels = [
            ("Constant (intercept)", "β_0"),
            ("Macro Factor", "β_M"),
            ("Domestic CDS", "β_D"),
            ("Global CDS", "β_G"),
        ];
        let f = &self.fit;
        let coefficients = labels
            .iter()
            .enumerate()
            .map(|(i, (variable, symbol))| CoefficientRow {
                variable: variable.to_string(),
                symbol: symbol.to_string(),
                value: f.coefficients[i],
                std_error: f.std_errors[i],
                t_statistic: f.t_statistics[i],
                p_value: f.p_values[i],
                significance: thresholds.label(f.p_values[i]).to_string(),
            })
            .collect();
        RegressionTable {
            coefficients,
            r_squared: f.r_squared,
            adj_r_squared: f.adj_r_squared,
            n_observations: f.n_observations,
        }
    }
}
