//! Pipeline configuration.
//!
//! The file is TOML: flat `key = value` pairs grouped under `[section]`
//! headers. Precedence, lowest first: built-in defaults, the file,
//! `DI_DECOMP_<SECTION>_<KEY>` environment variables, command-line flags.
//! Relative paths in the file resolve against the file's directory.
//!
//! ```toml
//! [data]
//! market = ["market.csv"]
//! focus_panel = "focus_panel.csv"
//!
//! [focus]
//! fetch = false
//! start = "2004-01-01"
//! end = "2025-12-26"
//!
//! [sample]
//! start = "2015-01-13"
//! end = "2025-12-12"
//!
//! [macro]
//! diff_before_join = true
//!
//! [significance]
//! highly = 0.001
//! significant = 0.01
//! weak = 0.05
//!
//! [output]
//! dir = "out"
//! strict = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decomposition::SignificanceThresholds;
use crate::error::{Error, Result};
use crate::ingestion::focus::{horizon_columns, DEFAULT_ENDPOINT};
use crate::series::TradingDate;

pub const ENV_PREFIX: &str = "DI_DECOMP_";
pub const SURPRISE_DIFF: &str = "SURPRISE_diff";

const SECTIONS: [&str; 7] = ["data", "focus", "sample", "macro", "significance", "output", "fixture"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Wide market CSV files; their series are merged.
    pub market: Vec<PathBuf>,
    /// Long Focus panel CSV, read when fetching is off and written after a fetch.
    pub focus_panel: Option<PathBuf>,
    /// Intermediate factor files consumed by the `decompose` stage.
    pub macro_factor: Option<PathBuf>,
    pub cds_components: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            market: vec![PathBuf::from("market.csv")],
            focus_panel: Some(PathBuf::from("focus_panel.csv")),
            macro_factor: None,
            cds_components: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocusConfig {
    pub fetch: bool,
    pub endpoint: String,
    pub start: TradingDate,
    pub end: TradingDate,
    /// Recorded HTTP exchanges to replay instead of reaching the network.
    pub replay: Option<PathBuf>,
    pub page_size: usize,
    pub retry_attempts: u32,
    pub retry_base_delay_ms: u64,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self {
            fetch: false,
            endpoint: DEFAULT_ENDPOINT.to_string(),
            start: TradingDate::from_ymd(2004, 1, 1).unwrap(),
            end: TradingDate::from_ymd(2025, 12, 26).unwrap(),
            replay: None,
            page_size: 1000,
            retry_attempts: 4,
            retry_base_delay_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub start: TradingDate,
    pub end: TradingDate,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            start: TradingDate::from_ymd(2015, 1, 13).unwrap(),
            end: TradingDate::from_ymd(2025, 12, 12).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroConfig {
    /// PLS input columns: horizon columns and/or `SURPRISE_diff`.
    pub columns: Vec<String>,
    /// Difference expectations on their full history before joining with
    /// market dates (otherwise join first, then difference).
    pub diff_before_join: bool,
}

impl Default for MacroConfig {
    fn default() -> Self {
        let mut columns = horizon_columns();
        columns.push(SURPRISE_DIFF.to_string());
        Self {
            columns,
            diff_before_join: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub strict: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureConfig {
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    pub focus: FocusConfig,
    pub sample: SampleConfig,
    #[serde(rename = "macro")]
    pub macro_factor: MacroConfig,
    pub significance: SignificanceThresholds,
    pub output: OutputConfig,
    pub fixture: FixtureConfig,
}

impl PipelineConfig {
    /// Parses a config document, applies environment overrides and resolves
    /// relative paths against `base_dir`.
    pub fn from_toml_str<I>(text: &str, env: I, base_dir: Option<&Path>) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        apply_env(&mut table, env)?;
        dates_as_strings(&mut table);
        let mut cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        if let Some(base) = base_dir {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Loads the file (if any) and process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let env = std::env::vars();
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml_str(&text, env, p.parent())
            }
            None => Self::from_toml_str("", env, None),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.market.iter_mut().for_each(fix);
        for p in [
            &mut self.data.focus_panel,
            &mut self.data.macro_factor,
            &mut self.data.cds_components,
            &mut self.focus.replay,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample.start >= self.sample.end {
            return Err(Error::Config(format!(
                "sample start {} must precede end {}",
                self.sample.start, self.sample.end
            )));
        }
        if self.focus.start > self.focus.end {
            return Err(Error::Config(format!(
                "Focus start {} is after end {}",
                self.focus.start, self.focus.end
            )));
        }
        let mut allowed = horizon_columns();
        allowed.push(SURPRISE_DIFF.to_string());
        if self.macro_factor.columns.is_empty() {
            return Err(Error::Config("macro.columns must not be empty".into()));
        }
        for c in &self.macro_factor.columns {
            if !allowed.contains(c) {
                return Err(Error::Config(format!("macro.columns: unknown column '{c}'")));
            }
        }
        let t = &self.significance;
        if !(0.0 < t.highly && t.highly <= t.significant && t.significant <= t.weak && t.weak < 1.0) {
            return Err(Error::Config(
                "significance thresholds must satisfy 0 < highly <= significant <= weak < 1".into(),
            ));
        }
        if self.data.market.is_empty() {
            return Err(Error::Config("data.market lists no files".into()));
        }
        if self.focus.page_size == 0 {
            return Err(Error::Config("focus.page_size must be positive".into()));
        }
        Ok(())
    }

    pub fn macro_factor_path(&self) -> PathBuf {
        self.data
            .macro_factor
            .clone()
            .unwrap_or_else(|| self.output.dir.join(super::MACRO_FACTOR_FILE))
    }

    pub fn cds_components_path(&self) -> PathBuf {
        self.data
            .cds_components
            .clone()
            .unwrap_or_else(|| self.output.dir.join(super::CDS_COMPONENTS_FILE))
    }
}

/// TOML local dates (`start = 2015-01-13`) are accepted and read as strings.
fn dates_as_strings(table: &mut toml::Table) {
    for v in table.iter_mut().map(|(_, v)| v) {
        match v {
            toml::Value::Datetime(d) => *v = toml::Value::String(d.to_string()),
            toml::Value::Table(t) => dates_as_strings(t),
            _ => {}
        }
    }
}

fn apply_env<I>(table: &mut toml::Table, env: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let rest = key[ENV_PREFIX.len()..].to_ascii_lowercase();
        let Some((section, field)) = rest.split_once('_') else {
            continue;
        };
        if !SECTIONS.contains(&section) || field.is_empty() {
            continue;
        }
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(toml::Value::String(raw.clone()));
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry {
            toml::Value::Table(t) => {
                t.insert(field.to_string(), value);
            }
            _ => return Err(Error::Config(format!("'{section}' is not a section"))),
        }
    }
    Ok(())
}
