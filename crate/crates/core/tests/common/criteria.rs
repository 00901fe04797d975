//! The eight acceptance checks. Each returns a one-line detail on success
//! and an explanation on failure.

use std::path::Path;
use std::time::Instant;

use di_decomp::cds::{split_cds_aligned, CDS_DOM, CDS_GLOB};
use di_decomp::decomposition::{accumulate, check_row_sum, contributions, fit_joined, D_DI5Y};
use di_decomp::ingestion::{reshape_horizons, CsvSchema};
use di_decomp::ingestion::market::load_market_csv;
use di_decomp::pipeline::fixture::{generate_fixture, FixtureSpec, FixtureTruth, CONFIG_FILE};
use di_decomp::pipeline::{fetch_panel, run_decompose, run_pipeline, PipelineConfig};
use di_decomp::pls::{pls1_fit_columns, MACRO_FACTOR};
use di_decomp::regression::ols_fit_columns;
use di_decomp::series::{sample_std, TradingDate};
use di_decomp::Error;
use rand::Rng;

use super::{fixtures_dir, frame, normals, oracle, rng, ten_points};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Config from a file without consulting the process environment.
pub fn hermetic_config(path: &Path) -> PipelineConfig {
    let text = std::fs::read_to_string(path).unwrap();
    PipelineConfig::from_toml_str(&text, Vec::<(String, String)>::new(), path.parent()).unwrap()
}

pub fn criterion_1_identities() -> Outcome {
    let started = Instant::now();
    let n = 500;
    let mut worst_daily = 0.0f64;
    let mut worst_cum = 0.0f64;
    let mut worst_final = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let m = normals(&mut r, n, 1.0);
        let d = normals(&mut r, n, 0.02);
        let g = normals(&mut r, n, 0.01);
        let b: [f64; 4] = [r.gen_range(-1.0..1.0), r.gen_range(-2.0..2.0), r.gen_range(100.0..400.0), r.gen_range(100.0..400.0)];
        let sd = r.gen_range(1.0..15.0);
        let e = normals(&mut r, n, sd);
        let y: Vec<f64> = (0..n).map(|i| b[0] + b[1] * m[i] + b[2] * d[i] + b[3] * g[i] + e[i]).collect();
        let joined = frame(vec![(D_DI5Y, y.clone()), (MACRO_FACTOR, m), (CDS_DOM, d), (CDS_GLOB, g)]);
        let model = fit_joined(&joined).map_err(|e| e.to_string())?;
        let c = contributions(&model, &joined).map_err(|e| e.to_string())?;
        for i in 0..n {
            let parts = c.constant[i] + c.macro_contrib[i] + c.riscobr_contrib[i] + c.global_contrib[i] + c.residual[i];
            worst_daily = worst_daily.max((y[i] - parts).abs());
        }
        let k = accumulate(&c);
        let mut running = 0.0;
        for i in 0..n {
            running += y[i];
            let s = k.snapshot(i);
            let parts: f64 = s.components().iter().sum();
            worst_cum = worst_cum.max((s.di5y_change_cum - parts).abs());
            ensure!((s.di5y_change_cum - running).abs() <= 1e-6, "seed {seed}: running sum drifts at row {i}");
        }
        k.validate(1e-6).map_err(|e| format!("seed {seed}: {e}"))?;
        let bound = 1e-6 * n as f64 * sample_std(&y);
        let fin = k.residual_cum[n - 1].abs();
        ensure!(fin <= bound, "seed {seed}: final residual_cum {fin:e} exceeds {bound:e}");
        worst_final = worst_final.max(fin / bound);
    }
    let secs = started.elapsed().as_secs_f64();
    ensure!(worst_daily <= 1e-9, "daily identity gap {worst_daily:e} bps");
    ensure!(worst_cum <= 1e-6, "cumulative identity gap {worst_cum:e} bps");
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!(
        "100 datasets: max daily gap {worst_daily:.1e}, max cumulative gap {worst_cum:.1e}, final residual at {worst_final:.1e} of bound, {secs:.2} s"
    ))
}

pub fn criterion_2_ols_oracle() -> Outcome {
    let (y, x1, x2) = ten_points();
    let names = vec!["x1".to_string(), "x2".to_string()];
    let fit = ols_fit_columns(&y, &names, &[&x1, &x2], true).map_err(|e| e.to_string())?;
    let o = oracle::ols(&y, &[&x1, &x2]);
    let mut worst = 0.0f64;
    for i in 0..3 {
        for (a, b) in [
            (fit.coefficients[i], o.beta[i]),
            (fit.std_errors[i], o.se[i]),
            (fit.t_statistics[i], o.t[i]),
            (fit.p_values[i], o.p[i]),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-8, "max deviation from oracle {worst:e}");
    ensure!((fit.r_squared - o.r2).abs() <= 1e-12, "R² {} vs {}", fit.r_squared, o.r2);

    let y_exact: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 1.5 - 2.0 * a + 0.5 * b).collect();
    let exact = ols_fit_columns(&y_exact, &names, &[&x1, &x2], true).map_err(|e| e.to_string())?;
    let gap = exact
        .coefficients
        .iter()
        .zip([1.5, -2.0, 0.5])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(gap <= 1e-9, "noiseless recovery off by {gap:e}");
    Ok(format!("max deviation {worst:.1e} over beta/se/t/p; noiseless gap {gap:.1e}"))
}

pub fn criterion_3_pls_oracle() -> Outcome {
    let mut worst_w = 0.0f64;
    let mut worst_anti = 0.0f64;
    let mut beaten = 0usize;
    for seed in 0..20u64 {
        let mut r = rng(2000 + seed);
        let n = 120;
        let k = 2 + (seed as usize % 6);
        let base = normals(&mut r, n, 1.0);
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let noise = normals(&mut r, n, 1.0);
                let scale = r.gen_range(0.1..50.0);
                base.iter().zip(noise).map(|(b, e)| scale * (0.5 * j as f64 * b + e) + j as f64).collect()
            })
            .collect();
        let noise = normals(&mut r, n, 1.0);
        let y: Vec<f64> = (0..n).map(|i| cols[0][i] * 0.3 - base[i] + noise[i]).collect();
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let model = pls1_fit_columns(&names, &refs, &y).map_err(|e| e.to_string())?;
        let w = oracle::pls_weights(&cols, &y);
        for (a, b) in model.weights.iter().zip(&w) {
            worst_w = worst_w.max((a - b).abs());
        }

        // covariance achieved by the fitted direction vs random unit directions
        let z = oracle::standardize(&cols);
        let score = |w: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..k).map(|j| z[j][i] * w[j]).sum()).collect() };
        let best = oracle::covariance(&score(&model.weights), &y).abs();
        let ybar = y.iter().sum::<f64>() / n as f64;
        let c: Vec<f64> = z
            .iter()
            .map(|col| col.iter().zip(&y).map(|(a, b)| a * (b - ybar)).sum::<f64>() / (n as f64 - 1.0))
            .collect();
        for _ in 0..100_000 {
            let mut u: Vec<f64> = normals(&mut r, k, 1.0);
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v /= norm);
            // Cov(Zu, y) = u . Z'(y - ybar) / (n - 1)
            let cov: f64 = u.iter().zip(&c).map(|(a, b)| a * b).sum();
            if cov.abs() > best * (1.0 + 1e-12) {
                beaten += 1;
            }
        }

        let f = model.apply_columns(&refs).map_err(|e| e.to_string())?;
        ensure!(oracle::corr(&f, &y) >= 0.0, "seed {seed}: factor anti-correlated with target");
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let model_neg = pls1_fit_columns(&names, &refs, &neg).map_err(|e| e.to_string())?;
        let f_neg = model_neg.apply_columns(&refs).map_err(|e| e.to_string())?;
        ensure!(oracle::corr(&f_neg, &neg) >= 0.0, "seed {seed}: negated fit anti-correlated");
        for (a, b) in model.weights.iter().zip(&model_neg.weights) {
            worst_anti = worst_anti.max((a + b).abs());
        }
        for (a, b) in f.iter().zip(&f_neg) {
            worst_anti = worst_anti.max((a + b).abs());
        }
    }
    ensure!(worst_w <= 1e-10, "weights differ from oracle by {worst_w:e}");
    ensure!(beaten == 0, "{beaten} random directions beat the PLS covariance");
    ensure!(worst_anti <= 1e-10, "y-negation antisymmetry off by {worst_anti:e}");
    Ok(format!(
        "20 instances: weight gap {worst_w:.1e}, 2e6 random directions never beat PLS, antisymmetry gap {worst_anti:.1e}"
    ))
}

pub fn criterion_4_cds_split() -> Outcome {
    let mut r = rng(4000);
    let n = 600;
    let regs: Vec<Vec<f64>> = [0.005, 0.01, 0.06, 0.05].iter().map(|sd| normals(&mut r, n, *sd)).collect();
    let noise = normals(&mut r, n, 0.015);
    let lin: Vec<f64> = (0..n)
        .map(|i| 2e-4 + 1.1 * regs[0][i] - 0.4 * regs[1][i] + 0.08 * regs[2][i] + 0.07 * regs[3][i])
        .collect();
    let cds: Vec<f64> = lin.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let rr = [regs[0].as_slice(), &regs[1], &regs[2], &regs[3]];
    let (_, glob, dom) = split_cds_aligned(&cds, rr).map_err(|e| e.to_string())?;
    let sum_gap = (0..n).map(|i| (glob[i] + dom[i] - cds[i]).abs()).fold(0.0, f64::max);
    ensure!(sum_gap <= 1e-12, "glob + dom misses cds by {sum_gap:e}");
    let mut ortho = dom.iter().sum::<f64>().abs();
    for x in &regs {
        ortho = ortho.max(dom.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs());
    }
    ensure!(ortho <= 1e-8, "residual not orthogonal to regressors: {ortho:e}");
    let (_, _, dom0) = split_cds_aligned(&lin, rr).map_err(|e| e.to_string())?;
    let max_dom = dom0.iter().map(|v| v.abs()).fold(0.0, f64::max);
    ensure!(max_dom < 1e-9, "noiseless case leaves |dom| = {max_dom:e}");
    Ok(format!("sum gap {sum_gap:.1e}, orthogonality {ortho:.1e}, noiseless |dom| {max_dom:.1e}"))
}

pub fn criterion_5_fixture_recovery() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = FixtureSpec::default();
    ensure!(spec.n == 2741 && spec.seed == 1, "default fixture is not the bundled one");
    let truth = generate_fixture(&spec, dir.path()).map_err(|e| e.to_string())?;
    let mut cfg = hermetic_config(&dir.path().join(CONFIG_FILE));
    cfg.output.dir = dir.path().join("out");
    run_decompose(&cfg).map_err(|e| e.to_string())?;

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(cfg.output.dir.join("report.json")).unwrap()).unwrap();
    let rows = &report["regression"]["coefficients"];
    let mut worst = 0.0f64;
    for i in 0..4 {
        let b = rows[i]["value"].as_f64().ok_or("missing coefficient")?;
        let z = (b - truth.spec.betas[i]).abs() / truth.analytic_std_errors[i];
        ensure!(z <= 3.0, "beta {i}: {b} vs true {} is {z:.2} standard errors away", truth.spec.betas[i]);
        worst = worst.max(z);
    }
    let r2 = report["regression"]["r_squared"].as_f64().unwrap();
    ensure!((r2 - spec.target_r2).abs() <= 0.05, "R² {r2} vs target {}", spec.target_r2);
    let shares: Vec<f64> = report["variance_shares"]["shares"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (s, t) in shares.iter().zip([0.01, 0.83, 0.16]) {
        ensure!((s - t).abs() <= 0.05, "variance shares {shares:?} vs (0.01, 0.83, 0.16)");
    }
    let n_report = report["n_observations"].as_u64().unwrap() as usize;
    let csv_rows = std::fs::read_to_string(cfg.output.dir.join("contributions.csv")).unwrap().lines().count() - 1;
    ensure!(n_report == csv_rows && n_report == spec.n, "report n {n_report}, csv rows {csv_rows}");
    let secs = started.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.2} s");
    Ok(format!(
        "worst beta {worst:.2} SE from truth, R² {r2:.4}, shares ({:.3}, {:.3}, {:.3}), {secs:.2} s",
        shares[0], shares[1], shares[2]
    ))
}

pub fn criterion_6_row_sums() -> Outcome {
    let t4 = [9.0010, 18.6477, 189.4902, 19.6635, 212.1975];
    let t5 = [71.6478, 27.7586, -36.9119, -14.2008, -850.2938];
    let t6 = [140.9811, 10.7171, -13.3540, -130.8443];
    check_row_sum(449.0, &t4, 0.01).map_err(|e| format!("peak row: {e}"))?;
    check_row_sum(-802.0, &t5, 0.01).map_err(|e| format!("trough row: {e}"))?;
    check_row_sum(7.5, &t6, 0.01).map_err(|e| format!("end row: {e}"))?;
    // the validator has to reject a misreading of the same row
    let misread = [14.09811, 10.7171, -13.3540, -130.8443];
    ensure!(check_row_sum(7.5, &misread, 0.01).is_err(), "validator accepted a wrong row");
    Ok("+449.0, -802.0 and +7.5 rows add up within 0.01 bps".into())
}

pub fn criterion_7_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_fixture(&FixtureSpec::default(), &dir.path().join("fx")).map_err(|e| e.to_string())?;
    let mut cfg = hermetic_config(&dir.path().join("fx").join(CONFIG_FILE));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        cfg.output.dir = dir.path().join(run);
        let outcome = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        let mut files: Vec<_> = outcome.files.iter().map(|p| p.file_name().unwrap().to_owned()).collect();
        files.sort();
        outputs.push((cfg.output.dir.clone(), files));
    }
    let (a, fa) = &outputs[0];
    let (b, fb) = &outputs[1];
    ensure!(fa == fb, "different file sets: {fa:?} vs {fb:?}");
    for ext in ["csv", "json", "svg"] {
        ensure!(
            fa.iter().any(|f| Path::new(f).extension().is_some_and(|e| e == ext)),
            "no .{ext} output"
        );
    }
    for f in fa {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        ensure!(x == y, "{} differs between runs", Path::new(f).display());
    }
    Ok(format!("{} output files byte-identical across two runs", fa.len()))
}

pub fn criterion_8_ingestion() -> Outcome {
    let mut cfg = PipelineConfig::default();
    cfg.focus.replay = Some(fixtures_dir().join("focus_recorded.json"));
    cfg.focus.start = TradingDate::from_ymd(2004, 1, 1).unwrap();
    cfg.focus.end = TradingDate::from_ymd(2004, 1, 9).unwrap();
    cfg.focus.page_size = 3;
    cfg.focus.retry_base_delay_ms = 1;
    let (panel, _) = fetch_panel(&cfg.focus, None).map_err(|e| e.to_string())?;
    let h = reshape_horizons(&panel).map_err(|e| e.to_string())?;
    let d0 = TradingDate::from_ymd(2004, 1, 2).unwrap();
    ensure!(h.frame.dates().first() == Some(&d0), "first survey date is {:?}", h.frame.dates().first());
    let row = h.frame.row(0);
    let expected_ipca = [6.00, 5.00, 4.50, 4.00];
    ensure!(row[..4] == expected_ipca, "IPCA row {:?}", &row[..4]);

    cfg.focus.replay = Some(fixtures_dir().join("focus_malformed.json"));
    match fetch_panel(&cfg.focus, None) {
        Err(Error::Payload { record, .. }) if record.contains("6,00") => {}
        other => return Err(format!("malformed payload gave {:?}", other.map(|_| ()))),
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path().join("m.csv");
    std::fs::write(&p, "date,DI5Y\n2015-01-13,12.50\n2015-01-14,\"12,60\"\n").unwrap();
    match load_market_csv(&p, &CsvSchema::market(&["DI5Y"]), true) {
        Err(Error::RejectedRows { lines, .. }) if lines.iter().any(|(l, _)| *l == 3) => {}
        other => return Err(format!("strict CSV gave {:?}", other.map(|_| ()))),
    }
    Ok("first row IPCA 6.00/5.00/4.50/4.00 on 2004-01-02; payload and strict-CSV errors raised".into())
}

pub const ALL: [(&str, fn() -> Outcome); 8] = [
    ("1 accounting identities", criterion_1_identities),
    ("2 OLS oracle", criterion_2_ols_oracle),
    ("3 PLS oracle", criterion_3_pls_oracle),
    ("4 CDS split", criterion_4_cds_split),
    ("5 fixture recovery", criterion_5_fixture_recovery),
    ("6 published row sums", criterion_6_row_sums),
    ("7 determinism", criterion_7_determinism),
    ("8 ingestion", criterion_8_ingestion),
];

pub fn load_truth(dir: &Path) -> FixtureTruth {
    FixtureTruth::load(&dir.join(di_decomp::pipeline::fixture::TRUTH_FILE)).unwrap()
}
