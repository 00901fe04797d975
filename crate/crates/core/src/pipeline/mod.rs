//! Staged pipeline: load inputs, build the macro factor, split CDS, fit the
//! decomposition and write the reports.
//!
//! Each stage writes its products into the output directory so the next one
//! can run on its own from those files.

pub mod config;
pub mod fixture;
pub mod report;
pub mod svg;

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::de::DeserializeOwned;

use crate::cds::{split_cds, CdsComponents, CdsSplitModel, CDS_DOM, CDS_GLOB};
use crate::decomposition::{
    accumulate, contributions, fit_joined, std_table, variance_shares, ContributionFrame,
    CumulativeFrame, DecompositionModel, StdTable, VarianceShares, CUMULATIVE_IDENTITY_TOL,
    DAILY_IDENTITY_TOL, D_DI5Y,
};
use crate::error::{Error, Result};
use crate::ingestion::focus::{fetch_focus, reshape_horizons, FocusClient, FocusPanel, Indicator, LoadReport, RetryPolicy};
use crate::ingestion::market::{self, load_market_csv, read_wide_csv, write_wide_csv, CsvLoadReport, CsvSchema, MarketDataset};
use crate::ingestion::transport::{HttpGet, RecordedTransport, RecordingTransport, UreqTransport};
use crate::pls::{macro_factor, pls1_fit, PlsModel, MACRO_FACTOR};
use crate::series::{diff, inner_join, log_return, to_bps_change, DailySeries, Frame};

pub use config::{FocusConfig, PipelineConfig, SURPRISE_DIFF};
pub use report::RunReport;

pub const MACRO_FACTOR_FILE: &str = "macro_factor.csv";
pub const PLS_MODEL_FILE: &str = "pls_model.json";
pub const CDS_COMPONENTS_FILE: &str = "cds_components.csv";
pub const CDS_MODEL_FILE: &str = "cds_model.json";
pub const FOCUS_PANEL_FILE: &str = "focus_panel.csv";
pub const FOCUS_LOAD_REPORT_FILE: &str = "focus_load_report.json";
pub const CONTRIBUTIONS_FILE: &str = "contributions.csv";
pub const CUMULATIVE_FILE: &str = "cumulative.csv";
pub const MODELS_FILE: &str = "models.json";
pub const REPORT_FILE: &str = "report.json";
pub const SVG_FILE: &str = "decomposition.svg";
pub const LOCK_FILE: &str = ".di-decomp.lock";

/// Decimals of bps values in the contribution CSVs.
pub const CSV_DECIMALS: usize = 4;

/// Exclusive handle on an output directory. Files registered through it are
/// deleted again unless [`OutputDir::commit`] is reached.
pub struct OutputDir {
    dir: PathBuf,
    lock: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputDir {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let lock = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::Config(format!(
                    "output directory {} is in use by another run (lock file {})",
                    dir.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(Error::io(&lock, e)),
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            lock,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path for `name`, remembered for cleanup.
    pub fn register(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        if !self.written.contains(&p) {
            self.written.push(p.clone());
        }
        p
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.register(name);
        std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    pub fn write_json<S: serde::Serialize>(&mut self, name: &str, value: &S) -> Result<PathBuf> {
        // via Value so object keys come out sorted
        let v = serde_json::to_value(value)?;
        self.write(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
        let _ = std::fs::remove_file(&self.lock);
    }
}

fn describe(s: &DailySeries) -> String {
    match (s.first_date(), s.last_date()) {
        (Some(a), Some(b)) => format!("{} {a}..{b} ({} rows)", s.name(), s.len()),
        _ => format!("{} empty", s.name()),
    }
}

/// Inner join that reports each input's date range when nothing overlaps.
pub fn join_checked(series: &[DailySeries], context: &str) -> Result<Frame> {
    let refs: Vec<&DailySeries> = series.iter().collect();
    let frame = inner_join(&refs)?;
    if frame.n_rows() == 0 {
        let ranges: Vec<String> = series.iter().map(describe).collect();
        let mut msg = format!("inputs {}", ranges.join("; "));
        if !context.is_empty() {
            msg.push_str("; ");
            msg.push_str(context);
        }
        return Err(Error::EmptyJoin(msg));
    }
    Ok(frame)
}

pub struct LoadedMarket {
    pub dataset: MarketDataset,
    pub reports: Vec<CsvLoadReport>,
}

pub fn load_market(cfg: &PipelineConfig) -> Result<LoadedMarket> {
    let mut dataset = MarketDataset::default();
    let mut reports = Vec::new();
    for path in &cfg.data.market {
        let (d, r) = load_market_csv(path, &CsvSchema::market(&[]), cfg.output.strict)?;
        dataset.merge(d)?;
        reports.push(r);
    }
    Ok(LoadedMarket { dataset, reports })
}

fn client<T: HttpGet>(cfg: &FocusConfig, transport: T) -> FocusClient<T> {
    let mut c = FocusClient::new(cfg.endpoint.clone(), transport);
    c.page_size = cfg.page_size;
    c.retry = RetryPolicy {
        attempts: cfg.retry_attempts,
        base_delay: Duration::from_millis(cfg.retry_base_delay_ms),
    };
    c
}

/// Downloads every indicator, or replays `cfg.replay` when set. With
/// `record`, live exchanges are saved there for later replay.
pub fn fetch_panel(cfg: &FocusConfig, record: Option<&Path>) -> Result<(FocusPanel, LoadReport)> {
    let indicators = Indicator::ALL;
    if let Some(replay) = &cfg.replay {
        let c = client(cfg, RecordedTransport::from_file(replay)?);
        return fetch_focus(&c, &indicators, cfg.start, cfg.end);
    }
    match record {
        Some(path) => {
            let c = client(cfg, RecordingTransport::new(UreqTransport::default()));
            let out = fetch_focus(&c, &indicators, cfg.start, cfg.end)?;
            c.transport.recording().save(path)?;
            Ok(out)
        }
        None => fetch_focus(&client(cfg, UreqTransport::default()), &indicators, cfg.start, cfg.end),
    }
}

pub fn load_focus(cfg: &PipelineConfig) -> Result<(FocusPanel, LoadReport)> {
    if cfg.focus.fetch {
        return fetch_panel(&cfg.focus, None);
    }
    let path = cfg
        .data
        .focus_panel
        .as_deref()
        .ok_or_else(|| Error::Config("focus.fetch is off and data.focus_panel is not set".into()))?;
    FocusPanel::read_csv(path)
}

pub struct MacroStage {
    pub model: PlsModel,
    pub factor: DailySeries,
    pub horizon_rows_dropped: usize,
}

fn needs_horizons(cfg: &PipelineConfig) -> bool {
    cfg.macro_factor.columns.iter().any(|c| c != SURPRISE_DIFF)
}

/// Fits the PLS macro factor on every date where all selected inputs and the
/// DI5Y change are available.
pub fn build_macro_factor(
    cfg: &PipelineConfig,
    market: &MarketDataset,
    panel: &FocusPanel,
) -> Result<MacroStage> {
    let columns = &cfg.macro_factor.columns;
    let horizons = reshape_horizons(panel)?;
    if needs_horizons(cfg) && horizons.frame.n_rows() == 0 {
        return Err(Error::EmptyJoin(format!(
            "no Focus survey date carries every indicator for four reference years ({} dates dropped)",
            horizons.dropped
        )));
    }
    let di5y = market.require(market::DI5Y)?;
    let level = |c: &String| -> Result<DailySeries> {
        if c == SURPRISE_DIFF {
            Ok(market.require(market::SURPRISE)?.clone().renamed(c.as_str()))
        } else {
            horizons.frame.series(c)
        }
    };

    let joined = if cfg.macro_factor.diff_before_join {
        let mut inputs = columns
            .iter()
            .map(|c| Ok(diff(&level(c)?)?.renamed(c.as_str())))
            .collect::<Result<Vec<_>>>()?;
        inputs.push(to_bps_change(di5y)?.renamed(D_DI5Y));
        join_checked(&inputs, "macro factor inputs")?
    } else {
        let mut levels = columns.iter().map(level).collect::<Result<Vec<_>>>()?;
        levels.push(di5y.clone().renamed(D_DI5Y));
        let lv = join_checked(&levels, "macro factor inputs")?;
        let changes = lv
            .names()
            .iter()
            .map(|name| {
                let s = lv.series(name)?;
                if name == D_DI5Y {
                    to_bps_change(&s)
                } else {
                    diff(&s)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        join_checked(&changes, "macro factor inputs")?
    };

    let x = joined.select(columns)?;
    let model = pls1_fit(&x, joined.require(D_DI5Y)?)?;
    let factor = macro_factor(&model, &x)?;
    Ok(MacroStage {
        model,
        factor,
        horizon_rows_dropped: horizons.dropped,
    })
}

/// Transforms the raw levels and splits CDS returns into global and domestic parts.
pub fn split_cds_stage(market: &MarketDataset) -> Result<(CdsSplitModel, CdsComponents)> {
    let lr = |n: &str| log_return(market.require(n)?);
    let inputs = [
        lr(market::CDS)?,
        lr(market::DXY)?,
        lr(market::CRB)?,
        lr(market::VIX)?,
        diff(market.require(market::UST10)?)?,
    ];
    join_checked(&inputs, "CDS split inputs")?;
    split_cds(&inputs[0], &inputs[1], &inputs[2], &inputs[3], &inputs[4])
}

pub struct Decomposition {
    pub model: DecompositionModel,
    pub contributions: ContributionFrame,
    pub cumulative: CumulativeFrame,
    pub shares: VarianceShares,
    pub std: StdTable,
}

/// Restricts the inputs to the sample window, fits, and checks both identities.
pub fn decompose(
    cfg: &PipelineConfig,
    d_di5y: &DailySeries,
    macro_f: &DailySeries,
    cds: &CdsComponents,
) -> Result<Decomposition> {
    let (start, end) = (Some(cfg.sample.start), Some(cfg.sample.end));
    let originals = [
        d_di5y.clone().renamed(D_DI5Y),
        macro_f.clone().renamed(MACRO_FACTOR),
        cds.dom.clone().renamed(CDS_DOM),
        cds.glob.clone().renamed(CDS_GLOB),
    ];
    let windowed: Vec<DailySeries> = originals.iter().map(|s| s.window(start, end)).collect();
    let joined = match join_checked(&windowed, "") {
        Ok(f) => f,
        Err(Error::EmptyJoin(_)) => {
            let ranges: Vec<String> = originals.iter().map(describe).collect();
            return Err(Error::EmptyJoin(format!(
                "inputs {}; sample window {}..{}",
                ranges.join("; "),
                cfg.sample.start,
                cfg.sample.end
            )));
        }
        Err(e) => return Err(e),
    };
    let model = fit_joined(&joined)?;
    let contributions = contributions(&model, &joined)?;
    let gap = contributions.max_identity_error();
    if !(gap <= DAILY_IDENTITY_TOL) {
        return Err(Error::Identity(format!("daily decomposition off by {gap:e} bps")));
    }
    let cumulative = accumulate(&contributions);
    cumulative.validate(CUMULATIVE_IDENTITY_TOL)?;
    let shares = variance_shares(&contributions)?;
    let std = std_table(&contributions)?;
    Ok(Decomposition {
        model,
        contributions,
        cumulative,
        shares,
        std,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_optional_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

/// Reads a factor CSV written by an earlier stage.
pub fn read_macro_factor(path: &Path, strict: bool) -> Result<DailySeries> {
    let (mut series, _) = read_wide_csv(path, &CsvSchema::exact(&[MACRO_FACTOR]), strict)?;
    Ok(series.remove(0))
}

pub fn read_cds_components(path: &Path, strict: bool) -> Result<CdsComponents> {
    let (series, _) = read_wide_csv(path, &CsvSchema::exact(&[CDS_GLOB, CDS_DOM]), strict)?;
    let mut glob = None;
    let mut dom = None;
    for s in series {
        match s.name() {
            CDS_GLOB => glob = Some(s),
            CDS_DOM => dom = Some(s),
            _ => {}
        }
    }
    match (glob, dom) {
        (Some(glob), Some(dom)) => Ok(CdsComponents { glob, dom }),
        _ => Err(Error::Schema(format!("{}: missing CDS component columns", path.display()))),
    }
}

fn emit_macro(out: &mut OutputDir, stage: &MacroStage) -> Result<()> {
    let p = out.register(MACRO_FACTOR_FILE);
    write_wide_csv(&p, &[&stage.factor], None)?;
    out.write_json(PLS_MODEL_FILE, &stage.model)?;
    Ok(())
}

fn emit_cds(out: &mut OutputDir, model: &CdsSplitModel, comps: &CdsComponents) -> Result<()> {
    let p = out.register(CDS_COMPONENTS_FILE);
    write_wide_csv(&p, &[&comps.glob, &comps.dom], None)?;
    out.write_json(CDS_MODEL_FILE, model)?;
    Ok(())
}

fn frame_series(dates: &[crate::series::TradingDate], cols: [(&str, &[f64]); 7]) -> Result<Vec<DailySeries>> {
    cols.iter()
        .skip(1)
        .map(|(name, v)| DailySeries::new(*name, dates.to_vec(), v.to_vec()))
        .collect()
}

fn emit_decomposition(
    out: &mut OutputDir,
    dec: &Decomposition,
    pls: Option<&PlsModel>,
    cds: Option<&CdsSplitModel>,
    report: &RunReport,
) -> Result<()> {
    let c = &dec.contributions;
    let daily = frame_series(
        &c.dates,
        [
            ("date", &[]),
            ("d_di5y_bps", &c.d_di5y),
            ("const_bps", &c.constant),
            ("macro_bps", &c.macro_contrib),
            ("riscobr_bps", &c.riscobr_contrib),
            ("global_bps", &c.global_contrib),
            ("residual_bps", &c.residual),
        ],
    )?;
    let p = out.register(CONTRIBUTIONS_FILE);
    write_wide_csv(&p, &daily.iter().collect::<Vec<_>>(), Some(CSV_DECIMALS))?;

    let k = &dec.cumulative;
    let cum = frame_series(
        &k.dates,
        [
            ("date", &[]),
            ("di5y_change_cum", &k.di5y_change_cum),
            ("const_cum", &k.const_cum),
            ("macro_cum", &k.macro_cum),
            ("riscobr_cum", &k.riscobr_cum),
            ("global_cum", &k.global_cum),
            ("residual_cum", &k.residual_cum),
        ],
    )?;
    let p = out.register(CUMULATIVE_FILE);
    write_wide_csv(&p, &cum.iter().collect::<Vec<_>>(), Some(CSV_DECIMALS))?;

    let models = serde_json::json!({
        "macro_factor": pls,
        "cds_split": cds,
        "decomposition": dec.model,
    });
    out.write_json(MODELS_FILE, &models)?;
    out.write_json(REPORT_FILE, report)?;
    let p = out.register(SVG_FILE);
    svg::emit_svg(&dec.cumulative, &p)
}

fn config_echo(cfg: &PipelineConfig) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    // where the outputs go is not part of what they describe
    if let Some(o) = v.get_mut("output").and_then(|o| o.as_object_mut()) {
        o.remove("dir");
    }
    Ok(v)
}

fn build_report(
    cfg: &PipelineConfig,
    dec: &Decomposition,
    pls: Option<&PlsModel>,
    cds: Option<&CdsSplitModel>,
    loads: report::LoadCounts,
) -> Result<RunReport> {
    let k = &dec.cumulative;
    let (peak, trough) = k.extremes().expect("non-empty sample");
    Ok(RunReport {
        software: report::Software::default(),
        sample: report::SamplePeriod {
            requested_start: cfg.sample.start,
            requested_end: cfg.sample.end,
            first: k.dates[0],
            last: k.dates[k.len() - 1],
        },
        n_observations: dec.contributions.len(),
        regression: dec.model.table(&cfg.significance),
        std_table: dec.std,
        variance_shares: dec.shares.clone(),
        cumulative: report::CumulativeSummary {
            peak,
            trough,
            end: k.last().expect("non-empty sample"),
        },
        macro_factor: pls.map(|m| report::MacroSummary {
            columns: m.columns.clone(),
            n_observations: m.n_observations,
            sign: m.sign.into(),
        }),
        cds_split: cds.map(|m| report::CdsSummary {
            alpha: m.alpha,
            gamma: m.gamma,
            r_squared: m.fit.r_squared,
            n_observations: m.fit.n_observations,
        }),
        loads,
        config: config_echo(cfg)?,
    })
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Runs every stage from raw inputs to the final reports.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::acquire(&cfg.output.dir)?;
    let market = staged("load-market", load_market(cfg))?;
    let (panel, focus_report) = staged("load-focus", load_focus(cfg))?;
    if cfg.focus.fetch {
        let p = out.register(FOCUS_PANEL_FILE);
        staged("load-focus", panel.write_csv(&p))?;
    }
    let macro_stage = staged("build-factors", build_macro_factor(cfg, &market.dataset, &panel))?;
    staged("build-factors", emit_macro(&mut out, &macro_stage))?;
    let (cds_model, comps) = staged("split-cds", split_cds_stage(&market.dataset))?;
    staged("split-cds", emit_cds(&mut out, &cds_model, &comps))?;
    let y = staged(
        "transform",
        market
            .dataset
            .require(market::DI5Y)
            .and_then(to_bps_change),
    )?;
    let dec = staged("decompose", decompose(cfg, &y, &macro_stage.factor, &comps))?;
    let loads = report::LoadCounts {
        market: market.reports,
        focus: Some(focus_report),
        horizon_rows_dropped: Some(macro_stage.horizon_rows_dropped),
    };
    let report = staged(
        "emit",
        build_report(cfg, &dec, Some(&macro_stage.model), Some(&cds_model), loads),
    )?;
    staged(
        "emit",
        emit_decomposition(&mut out, &dec, Some(&macro_stage.model), Some(&cds_model), &report),
    )?;
    Ok(RunOutcome {
        report,
        files: out.commit(),
    })
}

/// Fetches the Focus panel and writes it, with its load report, to `out`.
pub fn run_fetch_focus(cfg: &PipelineConfig, record: Option<&Path>, out: &Path) -> Result<LoadReport> {
    let (panel, report) = staged("fetch-focus", fetch_panel(&cfg.focus, record))?;
    staged("fetch-focus", panel.write_csv(out))?;
    let rp = out.with_file_name(FOCUS_LOAD_REPORT_FILE);
    let text = serde_json::to_string_pretty(&report)? + "\n";
    std::fs::write(&rp, text).map_err(|e| Error::io(&rp, e))?;
    Ok(report)
}

/// Builds the macro factor and writes it with its model.
pub fn run_build_factors(cfg: &PipelineConfig) -> Result<MacroStage> {
    cfg.validate()?;
    let mut out = OutputDir::acquire(&cfg.output.dir)?;
    let market = staged("load-market", load_market(cfg))?;
    let (panel, _) = staged("load-focus", load_focus(cfg))?;
    let stage = staged("build-factors", build_macro_factor(cfg, &market.dataset, &panel))?;
    staged("build-factors", emit_macro(&mut out, &stage))?;
    out.commit();
    Ok(stage)
}

pub fn run_split_cds(cfg: &PipelineConfig) -> Result<(CdsSplitModel, CdsComponents)> {
    cfg.validate()?;
    let mut out = OutputDir::acquire(&cfg.output.dir)?;
    let market = staged("load-market", load_market(cfg))?;
    let (model, comps) = staged("split-cds", split_cds_stage(&market.dataset))?;
    staged("split-cds", emit_cds(&mut out, &model, &comps))?;
    out.commit();
    Ok((model, comps))
}

/// Fits the decomposition from factor files written by earlier stages (or
/// supplied directly through `data.macro_factor` / `data.cds_components`).
/// Model files found next to the factor files are carried into `models.json`.
pub fn run_decompose(cfg: &PipelineConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut out = OutputDir::acquire(&cfg.output.dir)?;
    let market = staged("load-market", load_market(cfg))?;
    let macro_path = cfg.macro_factor_path();
    let cds_path = cfg.cds_components_path();
    let strict = cfg.output.strict;
    let macro_f = staged("decompose", read_macro_factor(&macro_path, strict))?;
    let comps = staged("decompose", read_cds_components(&cds_path, strict))?;
    let pls: Option<PlsModel> = staged(
        "decompose",
        read_optional_json(&macro_path.with_file_name(PLS_MODEL_FILE)),
    )?;
    let cds: Option<CdsSplitModel> = staged(
        "decompose",
        read_optional_json(&cds_path.with_file_name(CDS_MODEL_FILE)),
    )?;
    let y = staged(
        "transform",
        market
            .dataset
            .require(market::DI5Y)
            .and_then(to_bps_change),
    )?;
    let dec = staged("decompose", decompose(cfg, &y, &macro_f, &comps))?;
    let loads = report::LoadCounts {
        market: market.reports,
        ..Default::default()
    };
    let report = staged("emit", build_report(cfg, &dec, pls.as_ref(), cds.as_ref(), loads))?;
    staged(
        "emit",
        emit_decomposition(&mut out, &dec, pls.as_ref(), cds.as_ref(), &report),
    )?;
    Ok(RunOutcome {
        report,
        files: out.commit(),
    })
}
