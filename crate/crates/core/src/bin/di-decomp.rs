use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use di_decomp::pipeline::fixture::{generate_fixture, FixtureSpec};
use di_decomp::pipeline::{self, PipelineConfig, FOCUS_PANEL_FILE};
use di_decomp::series::TradingDate;
use di_decomp::{Error, ErrorKind, Result};

/// Decomposes daily changes of the 5-year DI futures rate into macro,
/// domestic-risk and global-risk contributions.
#[derive(Parser)]
#[command(name = "di-decomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// First date of the sample (or of the Focus download for fetch-focus).
    #[arg(long)]
    start: Option<TradingDate>,
    #[arg(long)]
    end: Option<TradingDate>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail on any rejected CSV row.
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip rejected CSV rows and list them in the report.
    #[arg(long)]
    lenient: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline from raw inputs to reports.
    Run(Common),
    /// Download the Focus expectations panel.
    FetchFocus {
        #[command(flatten)]
        common: Common,
        /// Replay recorded HTTP exchanges instead of going online.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Save the live HTTP exchanges to this file.
        #[arg(long, conflicts_with = "replay")]
        record: Option<PathBuf>,
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Fit the PLS macro factor and write macro_factor.csv.
    BuildFactors(Common),
    /// Split CDS returns and write cds_components.csv.
    SplitCds(Common),
    /// Fit the decomposition from previously written factor files.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        macro_factor: Option<PathBuf>,
        #[arg(long)]
        cds_components: Option<PathBuf>,
    },
    /// Write a synthetic dataset with known parameters.
    Fixture {
        #[arg(long, default_value = "fixture")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2741)]
        n: usize,
        #[arg(long, default_value_t = 0.2245)]
        r2: f64,
        /// Comma-separated const,macro,dom,glob coefficients.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        betas: Option<Vec<f64>>,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(common.config.as_deref())?;
    if let Some(s) = common.start {
        cfg.sample.start = s;
    }
    if let Some(e) = common.end {
        cfg.sample.end = e;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    if common.strict {
        cfg.output.strict = true;
    }
    if common.lenient {
        cfg.output.strict = false;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load(&common)?;
            let outcome = pipeline::run_pipeline(&cfg)?;
            print!("{}", outcome.report.summary());
            println!("Wrote {} files to {}", outcome.files.len(), cfg.output.dir.display());
        }
        Command::FetchFocus {
            common,
            replay,
            record,
            endpoint,
        } => {
            let mut cfg = load(&common)?;
            // here --start/--end bound the download rather than the sample
            cfg.focus.start = common.start.unwrap_or(cfg.focus.start);
            cfg.focus.end = common.end.unwrap_or(cfg.focus.end);
            if replay.is_some() {
                cfg.focus.replay = replay;
            }
            if let Some(e) = endpoint {
                cfg.focus.endpoint = e;
            }
            std::fs::create_dir_all(&cfg.output.dir).map_err(|e| Error::io(&cfg.output.dir, e))?;
            let path = cfg.output.dir.join(FOCUS_PANEL_FILE);
            let report = pipeline::run_fetch_focus(&cfg, record.as_deref(), &path)?;
            println!(
                "Fetched {} records ({} duplicates, {} rejected) into {}",
                report.fetched,
                report.deduplicated,
                report.rejected,
                path.display()
            );
        }
        Command::BuildFactors(common) => {
            let cfg = load(&common)?;
            let stage = pipeline::run_build_factors(&cfg)?;
            println!(
                "Macro factor: {} observations from {} inputs ({} survey dates dropped)",
                stage.factor.len(),
                stage.model.columns.len(),
                stage.horizon_rows_dropped
            );
        }
        Command::SplitCds(common) => {
            let cfg = load(&common)?;
            let (model, comps) = pipeline::run_split_cds(&cfg)?;
            println!(
                "CDS split: {} observations, R² {:.4}",
                comps.glob.len(),
                model.fit.r_squared
            );
        }
        Command::Decompose {
            common,
            macro_factor,
            cds_components,
        } => {
            let mut cfg = load(&common)?;
            if macro_factor.is_some() {
                cfg.data.macro_factor = macro_factor;
            }
            if cds_components.is_some() {
                cfg.data.cds_components = cds_components;
            }
            let outcome = pipeline::run_decompose(&cfg)?;
            print!("{}", outcome.report.summary());
        }
        Command::Fixture {
            out,
            seed,
            n,
            r2,
            betas,
        } => {
            let mut spec = FixtureSpec {
                seed,
                n,
                target_r2: r2,
                ..FixtureSpec::default()
            };
            if let Some(b) = betas {
                spec.betas = [b[0], b[1], b[2], b[3]];
            }
            let truth = generate_fixture(&spec, &out)?;
            println!(
                "Fixture written to {} ({} changes, {} to {})",
                out.display(),
                spec.n,
                truth.first_change_date,
                truth.last_change_date
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
