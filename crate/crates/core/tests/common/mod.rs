#![allow(dead_code)]

pub mod criteria;
pub mod oracle;

use std::path::{Path, PathBuf};

use di_decomp::series::{DailySeries, Frame, TradingDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

pub fn weekdays(n: usize) -> Vec<TradingDate> {
    let mut d = TradingDate::from_ymd(2015, 1, 13).unwrap();
    (0..n)
        .map(|_| {
            let out = d;
            d = d.next_weekday();
            out
        })
        .collect()
}

pub fn series(name: &str, values: Vec<f64>) -> DailySeries {
    DailySeries::new(name, weekdays(values.len()), values).unwrap()
}

pub fn frame(cols: Vec<(&str, Vec<f64>)>) -> Frame {
    let n = cols[0].1.len();
    Frame::new(weekdays(n), cols.into_iter().map(|(k, v)| (k.to_string(), v)).collect()).unwrap()
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The fixed 10-point regression dataset: y on two regressors.
pub fn ten_points() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    let x2 = vec![2.3, 1.9, 3.8, 4.1, 3.2, 5.9, 6.4, 5.5, 7.9, 8.8];
    let y = vec![3.1, 3.9, 6.2, 7.1, 7.0, 10.3, 11.2, 11.0, 14.1, 15.6];
    (y, x1, x2)
}
