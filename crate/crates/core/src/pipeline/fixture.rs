//! Seeded synthetic datasets with known generating parameters.
//!
//! The generator builds the three factors first and then raw inputs that
//! reproduce them: CDS returns are the exact sum of a global part (linear in
//! the external regressors) and a domestic part orthogonal to those
//! regressors, so the CDS split recovers both parts to rounding error. The
//! macro factor drives the surprise index and the Focus expectation paths
//! with noise. The bps change is `beta . [1, M, D, G] + noise` with noise
//! scaled to hit a target R².

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cds::{CDS_DOM, CDS_GLOB};
use crate::error::{Error, Result};
use crate::ingestion::focus::{FocusPanel, FocusRecord, Indicator, HORIZONS};
use crate::ingestion::market::{self, write_wide_csv};
use crate::pls::MACRO_FACTOR;
use crate::series::{cumsum, mean, sample_std, DailySeries, TradingDate};

pub const MARKET_FILE: &str = "market.csv";
pub const FOCUS_FILE: &str = "focus_panel.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "pipeline.toml";

/// Coefficient magnitudes of the published regression (const, macro, dom, glob).
pub const REFERENCE_BETAS: [f64; 4] = [0.051434, 0.635428, 339.045202, 325.577999];
pub const REFERENCE_R2: f64 = 0.224537;
/// Daily std (bps) of the macro, domestic and global contributions.
pub const REFERENCE_CONTRIBUTION_STD: [f64; 3] = [0.7732, 6.5172, 2.8679];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub seed: u64,
    /// Number of daily changes (the level series has one more row).
    pub n: usize,
    /// `[beta0, beta_macro, beta_dom, beta_glob]`.
    pub betas: [f64; 4],
    pub target_r2: f64,
    /// Sample std of the macro factor, CDS_dom and CDS_glob (ex intercept).
    pub factor_std: [f64; 3],
    pub start: TradingDate,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        let b = REFERENCE_BETAS;
        let c = REFERENCE_CONTRIBUTION_STD;
        Self {
            seed: 1,
            n: 2741,
            betas: b,
            target_r2: 0.2245,
            factor_std: [c[0] / b[1], c[1] / b[2], c[2] / b[3]],
            start: TradingDate::from_ymd(2015, 1, 12).unwrap(),
        }
    }
}

/// Ground truth written beside the generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub spec: FixtureSpec,
    pub noise_sigma: f64,
    /// Analytic standard errors `sigma * sqrt(diag((X'X)^-1))` on the realized factors.
    pub analytic_std_errors: [f64; 4],
    pub cds_alpha: f64,
    pub cds_gamma: [f64; 4],
    pub first_change_date: TradingDate,
    pub last_change_date: TradingDate,
    pub files: Vec<PathBuf>,
}

impl FixtureTruth {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn draw(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sd).expect("positive std");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Rescales to mean zero and the requested sample std.
fn normalize(v: &mut [f64], sd: f64) {
    let (m, s) = (mean(v), sample_std(v));
    v.iter_mut().for_each(|x| *x = (*x - m) / s * sd);
}

/// Removes the span of `basis` (plus a constant) from `v` by modified Gram-Schmidt.
fn orthogonalize(v: &mut [f64], basis: &[&[f64]]) {
    let n = v.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let ones = vec![1.0; n];
    for b in std::iter::once(ones.as_slice()).chain(basis.iter().copied()) {
        let mut u = b.to_vec();
        for qi in &q {
            let d: f64 = u.iter().zip(qi).map(|(a, c)| a * c).sum();
            u.iter_mut().zip(qi).for_each(|(a, c)| *a -= d * c);
        }
        let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        u.iter_mut().for_each(|a| *a /= norm);
        q.push(u);
    }
    // two passes for numerical orthogonality
    for _ in 0..2 {
        for qi in &q {
            let d: f64 = v.iter().zip(qi).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(qi).for_each(|(a, c)| *a -= d * c);
        }
    }
}

/// Inverse of a small symmetric positive-definite matrix by Gauss-Jordan.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..k {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                for j in 0..k {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

fn business_days(start: TradingDate, n: usize) -> Vec<TradingDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    out.push(d);
    while out.len() < n {
        d = d.next_weekday();
        out.push(d);
    }
    out
}

fn level_from_log_returns(base: f64, r: &[f64]) -> Vec<f64> {
    std::iter::once(base)
        .chain(cumsum(r).into_iter().map(|c| base * c.exp()))
        .collect()
}

fn level_from_diffs(base: f64, d: &[f64]) -> Vec<f64> {
    std::iter::once(base)
        .chain(cumsum(d).into_iter().map(|c| base + c))
        .collect()
}

/// Writes `market.csv`, `focus_panel.csv`, `macro_factor.csv`,
/// `cds_components.csv`, `truth.json` and a ready-to-run `pipeline.toml`.
pub fn generate_fixture(spec: &FixtureSpec, dir: &Path) -> Result<FixtureTruth> {
    if spec.n < 100 {
        return Err(Error::Config(format!("fixture needs n >= 100, got {}", spec.n)));
    }
    if !(spec.target_r2 > 0.0 && spec.target_r2 < 1.0) {
        return Err(Error::Config(format!(
            "target R² must lie in (0, 1), got {}",
            spec.target_r2
        )));
    }
    if spec.factor_std.iter().any(|s| !(*s > 0.0)) || spec.betas.iter().any(|b| !b.is_finite()) {
        return Err(Error::Config("fixture factor stds must be positive and betas finite".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dates = business_days(spec.start, n + 1);
    let change_dates = &dates[1..];

    // external conditions: log returns (DXY, CRB, VIX) and UST10 diff in pp
    let dxy = draw(&mut rng, n, 0.005);
    let crb = draw(&mut rng, n, 0.010);
    let vix = draw(&mut rng, n, 0.060);
    let ust = draw(&mut rng, n, 0.050);
    let raw_gamma = [0.8, -0.3, 0.06, 0.05];
    let raw_glob: Vec<f64> = (0..n)
        .map(|i| raw_gamma[0] * dxy[i] + raw_gamma[1] * crb[i] + raw_gamma[2] * vix[i] + raw_gamma[3] * ust[i])
        .collect();
    let scale = spec.factor_std[2] / sample_std(&raw_glob);
    let gamma = raw_gamma.map(|g| g * scale);
    let alpha = 1e-4;
    let glob: Vec<f64> = raw_glob.iter().map(|g| alpha + g * scale).collect();

    let mut dom = draw(&mut rng, n, 1.0);
    orthogonalize(&mut dom, &[&dxy, &crb, &vix, &ust]);
    let s = sample_std(&dom);
    dom.iter_mut().for_each(|x| *x *= spec.factor_std[1] / s);
    let cds: Vec<f64> = glob.iter().zip(&dom).map(|(g, d)| g + d).collect();

    let mut macro_f = draw(&mut rng, n, 1.0);
    normalize(&mut macro_f, spec.factor_std[0]);

    let [b0, bm, bd, bg] = spec.betas;
    let signal_var = (bm * spec.factor_std[0]).powi(2)
        + (bd * spec.factor_std[1]).powi(2)
        + (bg * sample_std(&glob)).powi(2);
    let noise_sigma = (signal_var * (1.0 - spec.target_r2) / spec.target_r2).sqrt();
    let noise = draw(&mut rng, n, noise_sigma);
    let d_bps: Vec<f64> = (0..n)
        .map(|i| b0 + bm * macro_f[i] + bd * dom[i] + bg * glob[i] + noise[i])
        .collect();

    // analytic standard errors on the realized design
    let design = [vec![1.0; n], macro_f.clone(), dom.clone(), glob.clone()];
    let gram: Vec<Vec<f64>> = design
        .iter()
        .map(|a| design.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let inv = invert(gram);
    let analytic_std_errors = [0, 1, 2, 3].map(|i| noise_sigma * inv[i][i].sqrt());

    // raw inputs
    let di5y = level_from_diffs(12.5, &d_bps.iter().map(|d| d / 100.0).collect::<Vec<_>>());
    let cds_lvl = level_from_log_returns(200.0, &cds);
    let dxy_lvl = level_from_log_returns(90.0, &dxy);
    let crb_lvl = level_from_log_returns(220.0, &crb);
    let vix_lvl = level_from_log_returns(15.0, &vix);
    let ust_lvl = level_from_diffs(2.0, &ust);
    let surprise_diff: Vec<f64> = draw(&mut rng, n, 0.5)
        .iter()
        .zip(&macro_f)
        .map(|(e, m)| m + e)
        .collect();
    let surprise = level_from_diffs(0.0, &surprise_diff);

    let series = |name: &str, v: Vec<f64>| DailySeries::new(name, dates.clone(), v);
    let market_series = [
        series(market::DI5Y, di5y)?,
        series(market::CDS, cds_lvl)?,
        series(market::DXY, dxy_lvl)?,
        series(market::CRB, crb_lvl)?,
        series(market::VIX, vix_lvl)?,
        series(market::UST10, ust_lvl)?,
        series(market::SURPRISE, surprise)?,
    ];
    let market_path = dir.join(MARKET_FILE);
    write_wide_csv(&market_path, &market_series.iter().collect::<Vec<_>>(), None)?;

    // Focus expectations: each horizon column drifts with the macro factor.
    let bases = [4.5, 12.0, 2.0, 1.0, -6.0];
    let mut records = Vec::with_capacity((n + 1) * 20);
    for (ii, ind) in Indicator::ALL.iter().enumerate() {
        for k in 0..HORIZONS {
            let loading = 0.01 * (1.0 + ii as f64 * 0.5) / (1.0 + k as f64);
            let steps: Vec<f64> = draw(&mut rng, n, 0.01)
                .iter()
                .zip(&macro_f)
                .map(|(e, m)| loading * m + e)
                .collect();
            let path = level_from_diffs(bases[ii] - 0.1 * k as f64, &steps);
            for (d, v) in dates.iter().zip(path) {
                records.push(FocusRecord {
                    survey_date: *d,
                    indicator: *ind,
                    reference_year: d.year() + k,
                    median: v,
                });
            }
        }
    }
    let (panel, _) = FocusPanel::from_records(records);
    let focus_path = dir.join(FOCUS_FILE);
    panel.write_csv(&focus_path)?;

    let macro_path = dir.join(super::MACRO_FACTOR_FILE);
    write_wide_csv(
        &macro_path,
        &[&DailySeries::new(MACRO_FACTOR, change_dates.to_vec(), macro_f)?],
        None,
    )?;
    let cds_path = dir.join(super::CDS_COMPONENTS_FILE);
    write_wide_csv(
        &cds_path,
        &[
            &DailySeries::new(CDS_GLOB, change_dates.to_vec(), glob)?,
            &DailySeries::new(CDS_DOM, change_dates.to_vec(), dom)?,
        ],
        None,
    )?;

    let config_path = dir.join(CONFIG_FILE);
    let config = format!(
        "# Synthetic fixture (seed {seed}, n = {n}).\n\
         [data]\n\
         market = [\"{MARKET_FILE}\"]\n\
         focus_panel = \"{FOCUS_FILE}\"\n\
         macro_factor = \"{}\"\n\
         cds_components = \"{}\"\n\n\
         [sample]\n\
         start = \"{}\"\n\
         end = \"{}\"\n\n\
         [output]\n\
         dir = \"out\"\n\
         strict = true\n",
        super::MACRO_FACTOR_FILE,
        super::CDS_COMPONENTS_FILE,
        change_dates[0],
        change_dates[n - 1],
        seed = spec.seed,
    );
    std::fs::write(&config_path, config).map_err(|e| Error::io(&config_path, e))?;

    let truth = FixtureTruth {
        spec: spec.clone(),
        noise_sigma,
        analytic_std_errors,
        cds_alpha: alpha,
        cds_gamma: gamma,
        first_change_date: change_dates[0],
        last_change_date: change_dates[n - 1],
        files: [MARKET_FILE, FOCUS_FILE, super::MACRO_FACTOR_FILE, super::CDS_COMPONENTS_FILE, CONFIG_FILE]
            .iter()
            .map(PathBuf::from)
            .collect(),
    };
    let truth_path = dir.join(TRUTH_FILE);
    std::fs::write(&truth_path, serde_json::to_string_pretty(&truth)? + "\n")
        .map_err(|e| Error::io(&truth_path, e))?;
    Ok(truth)
}
