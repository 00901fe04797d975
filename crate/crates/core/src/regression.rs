//! Ordinary least squares with classical (homoskedastic) inference.
//!
//! The design is solved through a column-pivoted Householder QR; a column
//! whose pivot falls below `1e-10` times the leading pivot is reported as
//! linearly dependent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::series::{mean, Frame};
use crate::stats::student_t_two_sided_p;

pub const INTERCEPT: &str = "const";

/// One OLS estimation. Coefficient vectors are intercept-first when an
/// intercept is present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Residual standard error.
    pub sigma: f64,
    pub n_observations: usize,
    /// Regressors excluding the intercept.
    pub n_regressors: usize,
    pub intercept: bool,
    pub dof: usize,
    #[serde(skip)]
    pub fitted: Vec<f64>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Fitted values for the given regressor columns (same order as the fit).
    pub fn predict(&self, columns: &[&[f64]]) -> Result<Vec<f64>> {
        if columns.len() != self.n_regressors {
            return Err(Error::LengthMismatch {
                what: "prediction regressors".into(),
                expected: self.n_regressors,
                got: columns.len(),
            });
        }
        let n = columns.first().map_or(0, |c| c.len());
        let offset = usize::from(self.intercept);
        let base = if self.intercept { self.coefficients[0] } else { 0.0 };
        Ok((0..n)
            .map(|i| {
                base + columns
                    .iter()
                    .zip(&self.coefficients[offset..])
                    .map(|(c, b)| b * c[i])
                    .sum::<f64>()
            })
            .collect())
    }
}

/// Fits `y` on the columns of `x`.
pub fn ols_fit(y: &[f64], x: &Frame, intercept: bool) -> Result<OlsFit> {
    let cols: Vec<&[f64]> = x.columns().iter().map(Vec::as_slice).collect();
    ols_fit_columns(y, x.names(), &cols, intercept)
}

/// Fits `y` on named regressor columns.
pub fn ols_fit_columns(
    y: &[f64],
    names: &[String],
    columns: &[&[f64]],
    intercept: bool,
) -> Result<OlsFit> {
    let n = y.len();
    if names.len() != columns.len() {
        return Err(Error::LengthMismatch {
            what: "regressor names".into(),
            expected: columns.len(),
            got: names.len(),
        });
    }
    for (name, c) in names.iter().zip(columns) {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                what: format!("regressor '{name}' vs response"),
                expected: n,
                got: c.len(),
            });
        }
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!("response is not finite at row {pos}")));
    }
    for (name, c) in names.iter().zip(columns) {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!("regressor '{name}' is not finite")));
        }
    }

    let k = columns.len();
    let p = k + usize::from(intercept);
    if p == 0 {
        return Err(Error::Schema("regression needs at least one column".into()));
    }
    if n <= p {
        return Err(Error::InsufficientData {
            what: "OLS".into(),
            needed: p + 1,
            got: n,
        });
    }

    let ones = vec![1.0; n];
    let mut design: Vec<&[f64]> = Vec::with_capacity(p);
    let mut all_names = Vec::with_capacity(p);
    if intercept {
        design.push(&ones);
        all_names.push(INTERCEPT.to_string());
    }
    design.extend_from_slice(columns);
    all_names.extend(names.iter().cloned());

    let qr = PivotedQr::new(&design);
    if qr.rank() < p {
        let columns = qr
            .dependent_columns()
            .into_iter()
            .map(|i| all_names[i].clone())
            .collect();
        return Err(Error::SingularDesign { columns });
    }

    let coefficients = qr.solve(y);
    let fitted: Vec<f64> = (0..n)
        .map(|i| design.iter().zip(&coefficients).map(|(c, b)| b * c[i]).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    let dof = n - p;
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let sst: f64 = if intercept {
        let m = mean(y);
        y.iter().map(|v| (v - m).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if k == 0 || sst == 0.0 {
        0.0
    } else {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    };
    let base_dof = if intercept { n - 1 } else { n } as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * base_dof / dof as f64;

    let sigma2 = ssr / dof as f64;
    let std_errors: Vec<f64> = qr
        .inverse_gram_diagonal()
        .into_iter()
        .map(|d| (sigma2 * d).sqrt())
        .collect();
    let mut t_statistics = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for (b, se) in coefficients.iter().zip(&std_errors) {
        let t = if *se > 0.0 {
            b / se
        } else if *b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        let pv = if t.is_finite() {
            student_t_two_sided_p(t, dof)?
        } else {
            0.0
        };
        t_statistics.push(t);
        p_values.push(pv);
    }

    Ok(OlsFit {
        names: all_names,
        coefficients,
        std_errors,
        t_statistics,
        p_values,
        r_squared,
        adj_r_squared,
        sigma: sigma2.sqrt(),
        n_observations: n,
        n_regressors: k,
        intercept,
        dof,
        fitted,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn noiseless_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
        let fit = ols_fit_columns(&y, &names(&["x"]), &[&x], true).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [3.0, 3.0, 3.0, 3.0];
        let fit = ols_fit_columns(&y, &[], &[], true).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-14);
        assert_eq!(fit.r_squared, 0.0);

        let y = [1.0, 2.0, 4.0, 9.0];
        let fit = ols_fit_columns(&y, &[], &[], true).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-14);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn singular_design_names_columns() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let y = [1.0, 0.0, 1.0, 0.0, 2.0];
        match ols_fit_columns(&y, &names(&["a", "b"]), &[&a, &b], true) {
            Err(Error::SingularDesign { columns }) => {
                assert_eq!(columns.len(), 1);
                assert!(columns[0] == "a" || columns[0] == "b");
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = [7.0; 5];
        assert!(matches!(
            ols_fit_columns(&y, &names(&["c"]), &[&c], true),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let x = [1.0, 2.0];
        let y = [1.0, 2.0];
        assert!(matches!(
            ols_fit_columns(&y, &names(&["x"]), &[&x], true),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn no_intercept_fit() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.1, 5.9, 8.0];
        let fit = ols_fit_columns(&y, &names(&["x"]), &[&x], false).unwrap();
        // b = Σxy / Σx²
        let b = (2.0 + 8.2 + 17.7 + 32.0) / 30.0;
        assert!((fit.coefficients[0] - b).abs() < 1e-12);
        assert_eq!(fit.dof, 3);
        assert!(fit.adj_r_squared <= fit.r_squared);
    }

    #[test]
    fn predict_matches_fitted() {
        let x1 = [0.3, 1.2, -0.7, 2.2, 0.1, -1.5];
        let x2 = [1.0, 0.0, 1.0, 1.0, 0.0, 0.5];
        let y = [1.0, 2.5, -0.3, 4.1, 0.9, -1.0];
        let fit = ols_fit_columns(&y, &names(&["x1", "x2"]), &[&x1, &x2], true).unwrap();
        let pred = fit.predict(&[&x1, &x2]).unwrap();
        for (a, b) in pred.iter().zip(&fit.fitted) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
