//! Global/domestic split of daily CDS log-returns.
//!
//! CDS returns are regressed (with intercept) on contemporaneous external
//! conditions. Fitted values, intercept included, form the global component;
//! residuals form the domestic one. Inputs must already be transformed
//! (log-returns for CDS, DXY, CRB, VIX; simple difference for UST10).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{ols_fit_columns, OlsFit};
use crate::series::{inner_join, DailySeries};

pub const GLOBAL_REGRESSORS: [&str; 4] = ["DXY", "CRB", "VIX", "UST10"];
pub const CDS_GLOB: &str = "CDS_glob";
pub const CDS_DOM: &str = "CDS_dom";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdsSplitModel {
    pub alpha: f64,
    /// Loadings in DXY, CRB, VIX, UST10 order.
    pub gamma: [f64; 4],
    pub fit: OlsFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdsComponents {
    pub glob: DailySeries,
    pub dom: DailySeries,
}

/// Splits date-aligned CDS returns; returns `(model, glob, dom)`.
pub fn split_cds_aligned(
    cds: &[f64],
    regressors: [&[f64]; 4],
) -> Result<(CdsSplitModel, Vec<f64>, Vec<f64>)> {
    if cds.len() <= 5 {
        return Err(Error::InsufficientData {
            what: "CDS split".into(),
            needed: 6,
            got: cds.len(),
        });
    }
    let names: Vec<String> = GLOBAL_REGRESSORS.iter().map(|s| s.to_string()).collect();
    let fit = ols_fit_columns(cds, &names, &regressors, true)?;
    let glob = fit.fitted.clone();
    let dom = fit.residuals.clone();
    let model = CdsSplitModel {
        alpha: fit.coefficients[0],
        gamma: [
            fit.coefficients[1],
            fit.coefficients[2],
            fit.coefficients[3],
            fit.coefficients[4],
        ],
        fit,
    };
    Ok((model, glob, dom))
}

/// Joins the five transformed series by date and splits CDS into global and
/// domestic parts on the common dates.
pub fn split_cds(
    cds: &DailySeries,
    dxy: &DailySeries,
    crb: &DailySeries,
    vix: &DailySeries,
    ust10: &DailySeries,
) -> Result<(CdsSplitModel, CdsComponents)> {
    let named = [
        cds.clone().renamed("CDS"),
        dxy.clone().renamed(GLOBAL_REGRESSORS[0]),
        crb.clone().renamed(GLOBAL_REGRESSORS[1]),
        vix.clone().renamed(GLOBAL_REGRESSORS[2]),
        ust10.clone().renamed(GLOBAL_REGRESSORS[3]),
    ];
    let refs: Vec<&DailySeries> = named.iter().collect();
    let joined = inner_join(&refs)?;
    let c = |i: usize| joined.columns()[i].as_slice();
    let (model, glob, dom) = split_cds_aligned(c(0), [c(1), c(2), c(3), c(4)])?;
    let dates = joined.dates().to_vec();
    Ok((
        model,
        CdsComponents {
            glob: DailySeries::new(CDS_GLOB, dates.clone(), glob)?,
            dom: DailySeries::new(CDS_DOM, dates, dom)?,
        },
    ))
}
