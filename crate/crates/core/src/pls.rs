//! One-component PLS macro factor.
//!
//! Inputs are standardized, the weight vector is the unit-length direction
//! maximizing the sample covariance of the score with the target, the
//! score's sign is anchored so that it correlates non-negatively with the
//! target, and the anchored score is standardized once more.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{correlation, mean, sample_std, DailySeries, Frame, StandardizationParams};

pub const MACRO_FACTOR: &str = "Macro_Factor_PLS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

/// Fitted one-component PLS model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub columns: Vec<String>,
    /// Unit-norm weights on the standardized inputs.
    pub weights: Vec<f64>,
    pub input_standardization: StandardizationParams,
    pub sign: Sign,
    pub factor_mean: f64,
    pub factor_std: f64,
    pub n_observations: usize,
}

/// Flips `f` when it correlates negatively with `y`. Zero correlation keeps the sign.
pub fn anchor_sign(f: &[f64], y: &[f64]) -> Result<(Vec<f64>, Sign)> {
    if f.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "factor vs target".into(),
            expected: y.len(),
            got: f.len(),
        });
    }
    if f.len() < 2 {
        return Err(Error::InsufficientData {
            what: "sign anchoring".into(),
            needed: 2,
            got: f.len(),
        });
    }
    if !(sample_std(f) > 0.0) {
        return Err(Error::Degenerate("factor is constant".into()));
    }
    if !(sample_std(y) > 0.0) {
        return Err(Error::Degenerate("target is constant".into()));
    }
    if correlation(f, y) < 0.0 {
        Ok((f.iter().map(|v| -v).collect(), Sign::Negative))
    } else {
        Ok((f.to_vec(), Sign::Positive))
    }
}

/// Fits the model on a training frame and target aligned row by row.
pub fn pls1_fit(x: &Frame, y: &[f64]) -> Result<PlsModel> {
    let cols: Vec<&[f64]> = x.columns().iter().map(Vec::as_slice).collect();
    pls1_fit_columns(x.names(), &cols, y)
}

pub fn pls1_fit_columns(names: &[String], columns: &[&[f64]], y: &[f64]) -> Result<PlsModel> {
    let n = y.len();
    if n < 3 {
        return Err(Error::InsufficientData {
            what: "PLS fit".into(),
            needed: 3,
            got: n,
        });
    }
    if columns.is_empty() {
        return Err(Error::Schema("PLS needs at least one input column".into()));
    }
    for (name, c) in names.iter().zip(columns) {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                what: format!("PLS input '{name}' vs target"),
                expected: n,
                got: c.len(),
            });
        }
    }
    if !(sample_std(y) > 0.0) {
        return Err(Error::Degenerate("PLS target is constant".into()));
    }

    let params = StandardizationParams::from_columns(names, columns)?;
    let z = standardized_columns(&params, columns);
    let y_mean = mean(y);
    let mut weights: Vec<f64> = z
        .iter()
        .map(|col| col.iter().zip(y).map(|(a, b)| a * (b - y_mean)).sum())
        .collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate(
            "inputs have zero covariance with the target".into(),
        ));
    }
    weights.iter_mut().for_each(|w| *w /= norm);

    let score = project(&z, &weights, n);
    let (anchored, sign) = anchor_sign(&score, y)?;
    let factor_mean = mean(&anchored);
    let factor_std = sample_std(&anchored);
    if !(factor_std > 0.0) {
        return Err(Error::Degenerate("PLS score is constant".into()));
    }

    Ok(PlsModel {
        columns: names.to_vec(),
        weights,
        input_standardization: params,
        sign,
        factor_mean,
        factor_std,
        n_observations: n,
    })
}

fn standardized_columns(params: &StandardizationParams, columns: &[&[f64]]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c.iter()
                .map(|x| (x - params.mean[j]) / params.std[j])
                .collect()
        })
        .collect()
}

fn project(z: &[Vec<f64>], w: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| z.iter().zip(w).map(|(c, wj)| c[i] * wj).sum())
        .collect()
}

impl PlsModel {
    /// Factor values for rows of raw input columns in model order.
    pub fn apply_columns(&self, columns: &[&[f64]]) -> Result<Vec<f64>> {
        if columns.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "PLS model expects {} columns, got {}",
                self.columns.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Schema("PLS input columns differ in length".into()));
        }
        let z = standardized_columns(&self.input_standardization, columns);
        let s = self.sign.factor();
        Ok(project(&z, &self.weights, n)
            .into_iter()
            .map(|f| (s * f - self.factor_mean) / self.factor_std)
            .collect())
    }
}

/// Applies a fitted model to a frame whose columns match the model's names and order.
pub fn macro_factor(model: &PlsModel, x_new: &Frame) -> Result<DailySeries> {
    if x_new.names() != model.columns.as_slice() {
        return Err(Error::Schema(format!(
            "macro factor expects columns {:?}, got {:?}",
            model.columns,
            x_new.names()
        )));
    }
    let cols: Vec<&[f64]> = x_new.columns().iter().map(Vec::as_slice).collect();
    let values = model.apply_columns(&cols)?;
    DailySeries::new(MACRO_FACTOR, x_new.dates().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TradingDate;

    fn frame(cols: Vec<(&str, Vec<f64>)>) -> Frame {
        let n = cols[0].1.len();
        let mut d = TradingDate::from_ymd(2020, 1, 1).unwrap();
        let dates = (0..n)
            .map(|_| {
                d = d.next_weekday();
                d
            })
            .collect();
        Frame::new(
            dates,
            cols.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn anchor_flips_negative() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let f = [4.0, 3.5, 1.0, 2.0];
        let (g, s) = anchor_sign(&f, &y).unwrap();
        assert_eq!(s, Sign::Negative);
        assert_eq!(g, vec![-4.0, -3.5, -1.0, -2.0]);

        let (g, s) = anchor_sign(&y, &y).unwrap();
        assert_eq!(s, Sign::Positive);
        assert_eq!(g, y.to_vec());
    }

    #[test]
    fn anchor_zero_correlation_keeps_sign() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let f = [1.0, 1.0, -1.0, -1.0];
        assert_eq!(correlation(&f, &y), 0.0);
        let (g, s) = anchor_sign(&f, &y).unwrap();
        assert_eq!(s, Sign::Positive);
        assert_eq!(g, f.to_vec());
    }

    #[test]
    fn anchor_rejects_constant() {
        assert!(anchor_sign(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(anchor_sign(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn single_column_is_standardized_column() {
        let x = vec![0.5, 1.5, -0.2, 2.0, 0.0, 1.1];
        let y = vec![1.0, 2.0, 0.0, 2.5, 0.4, 1.0];
        let f = frame(vec![("x", x.clone())]);
        let m = pls1_fit(&f, &y).unwrap();
        assert_eq!(m.weights.len(), 1);
        assert!((m.weights[0].abs() - 1.0).abs() < 1e-15);
        let fac = macro_factor(&m, &f).unwrap();
        let (mx, sx) = (mean(&x), sample_std(&x));
        for (a, b) in fac.values().iter().zip(&x) {
            assert!((a - (b - mx) / sx).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_target_is_degenerate() {
        let f = frame(vec![("x", vec![1.0, 2.0, 3.0])]);
        assert!(matches!(
            pls1_fit(&f, &[2.0, 2.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_variance_column_propagates() {
        let f = frame(vec![("a", vec![1.0, 2.0, 3.0]), ("flat", vec![1.0; 3])]);
        match pls1_fit(&f, &[1.0, 3.0, 2.0]) {
            Err(Error::DegenerateColumn(c)) => assert_eq!(c, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mean_row_projects_to_shifted_zero() {
        let x1 = vec![0.1, 0.4, -0.3, 0.8, -0.5, 0.2, 0.0];
        let x2 = vec![1.0, -1.0, 0.5, 0.3, 0.2, -0.4, 0.9];
        let y = vec![0.3, 0.2, -0.4, 1.0, -0.8, 0.1, 0.4];
        let f = frame(vec![("a", x1.clone()), ("b", x2.clone())]);
        let m = pls1_fit(&f, &y).unwrap();
        let row = m
            .apply_columns(&[&[mean(&x1)], &[mean(&x2)]])
            .unwrap();
        assert!((row[0] - (0.0 - m.factor_mean) / m.factor_std).abs() < 1e-12);
    }

    #[test]
    fn schema_mismatch_errors() {
        let f = frame(vec![("a", vec![1.0, 2.0, 4.0]), ("b", vec![0.0, 1.0, 0.5])]);
        let m = pls1_fit(&f, &[1.0, 2.0, 2.5]).unwrap();
        let swapped = f.select(&["b".into(), "a".into()]).unwrap();
        assert!(matches!(macro_factor(&m, &swapped), Err(Error::Schema(_))));
    }

    #[test]
    fn model_json_round_trip() {
        let f = frame(vec![("a", vec![1.0, 2.0, 4.0, 3.0])]);
        let m = pls1_fit(&f, &[1.0, 2.0, 2.5, 2.0]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"sign\":1"));
        let back: PlsModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
