//! Focus survey annual expectations: OData client, long panel and the
//! horizon-column reshape (`<Indicator>_year`, `_year_1`, `_year_2`, `_year_3`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::transport::HttpGet;
use crate::error::{Error, Result};
use crate::series::{Frame, TradingDate};

pub const DEFAULT_ENDPOINT: &str =
    "https://olinda.bcb.gov.br/olinda/servico/Expectativas/versao/v1/odata/ExpectativasMercadoAnuais";

/// Number of forward reference years per indicator, current year included.
pub const HORIZONS: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Indicator {
    #[serde(rename = "IPCA")]
    Ipca,
    Selic,
    #[serde(rename = "PIB")]
    Pib,
    Primario,
    Nominal,
}

impl Indicator {
    pub const ALL: [Indicator; 5] = [
        Indicator::Ipca,
        Indicator::Selic,
        Indicator::Pib,
        Indicator::Primario,
        Indicator::Nominal,
    ];

    /// Column prefix in the horizon frame and the panel CSV.
    pub fn code(self) -> &'static str {
        match self {
            Indicator::Ipca => "IPCA",
            Indicator::Selic => "Selic",
            Indicator::Pib => "PIB",
            Indicator::Primario => "Primario",
            Indicator::Nominal => "Nominal",
        }
    }

    /// Name used by the `Indicador` field of the expectations service.
    pub fn api_name(self) -> &'static str {
        match self {
            Indicator::Ipca => "IPCA",
            Indicator::Selic => "Selic",
            Indicator::Pib => "PIB Total",
            Indicator::Primario => "Resultado primário",
            Indicator::Nominal => "Resultado nominal",
        }
    }

    pub fn horizon_column(self, k: i32) -> String {
        if k == 0 {
            format!("{}_year", self.code())
        } else {
            format!("{}_year_{k}", self.code())
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Indicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Indicator::ALL
            .into_iter()
            .find(|i| i.code().eq_ignore_ascii_case(s) || i.api_name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown Focus indicator '{s}'")))
    }
}

/// All 20 horizon columns in indicator-major order.
pub fn horizon_columns() -> Vec<String> {
    Indicator::ALL
        .iter()
        .flat_map(|i| (0..HORIZONS).map(move |k| i.horizon_column(k)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusRecord {
    pub survey_date: TradingDate,
    pub indicator: Indicator,
    pub reference_year: i32,
    pub median: f64,
}

impl FocusRecord {
    fn key(&self) -> (TradingDate, Indicator, i32) {
        (self.survey_date, self.indicator, self.reference_year)
    }
}

/// Counts reported by loaders and reshapes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub fetched: usize,
    pub deduplicated: usize,
    pub dropped: usize,
    pub rejected: usize,
}

/// Long panel keyed by (survey date, indicator, reference year), sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FocusPanel {
    records: Vec<FocusRecord>,
}

impl FocusPanel {
    /// Enforces key uniqueness (last record wins) and `reference_year >= year(survey_date)`.
    pub fn from_records(records: Vec<FocusRecord>) -> (Self, LoadReport) {
        let mut report = LoadReport {
            fetched: records.len(),
            ..LoadReport::default()
        };
        let mut map = BTreeMap::new();
        for r in records {
            if r.reference_year < r.survey_date.year() || !r.median.is_finite() {
                report.rejected += 1;
                continue;
            }
            if map.insert(r.key(), r).is_some() {
                report.deduplicated += 1;
                log::warn!(
                    "duplicate Focus record for {} {} {}; keeping the last one",
                    r.survey_date,
                    r.indicator,
                    r.reference_year
                );
            }
        }
        (
            Self {
                records: map.into_values().collect(),
            },
            report,
        )
    }

    pub fn records(&self) -> &[FocusRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, date: TradingDate, indicator: Indicator, year: i32) -> Option<f64> {
        self.records
            .binary_search_by(|r| r.key().cmp(&(date, indicator, year)))
            .ok()
            .map(|i| self.records[i].median)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("date,indicator,reference_year,median\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.survey_date, r.indicator, r.reference_year, r.median
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<(Self, LoadReport)> {
        let csv_err = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(e.to_string()))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header != ["date", "indicator", "reference_year", "median"] {
            return Err(csv_err(format!(
                "expected header date,indicator,reference_year,median, got {}",
                header.join(",")
            )));
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_err(e.to_string()))?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |what: &str| csv_err(format!("line {line}: invalid {what}"));
            records.push(FocusRecord {
                survey_date: row[0].parse().map_err(|_| bad("date"))?,
                indicator: row[1].parse().map_err(|_| bad("indicator"))?,
                reference_year: row[2].parse().map_err(|_| bad("reference_year"))?,
                median: row[3].parse().map_err(|_| bad("median"))?,
            });
        }
        Ok(Self::from_records(records))
    }
}

/// Expectations reshaped into one column per (indicator, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonFrame {
    pub frame: Frame,
    /// Survey dates dropped for lacking at least one required cell.
    pub dropped: usize,
}

/// Emits one row per survey date holding every indicator for reference years
/// `year(d)` through `year(d) + 3`.
pub fn reshape_horizons(panel: &FocusPanel) -> Result<HorizonFrame> {
    let dates: BTreeSet<TradingDate> = panel.records.iter().map(|r| r.survey_date).collect();
    let names = horizon_columns();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut kept = Vec::new();
    let mut dropped = 0;
    for d in dates {
        let row: Option<Vec<f64>> = Indicator::ALL
            .iter()
            .flat_map(|i| (0..HORIZONS).map(move |k| (*i, k)))
            .map(|(i, k)| panel.get(d, i, d.year() + k))
            .collect();
        match row {
            Some(values) => {
                kept.push(d);
                for (c, v) in columns.iter_mut().zip(values) {
                    c.push(v);
                }
            }
            None => dropped += 1,
        }
    }
    Ok(HorizonFrame {
        frame: Frame::new(kept, names.into_iter().zip(columns).collect())?,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 4,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Client for the annual market-expectations OData resource.
pub struct FocusClient<T> {
    pub endpoint: String,
    pub transport: T,
    pub page_size: usize,
    pub retry: RetryPolicy,
}

fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' | b'$' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

impl<T: HttpGet> FocusClient<T> {
    pub fn new(endpoint: impl Into<String>, transport: T) -> Self {
        Self {
            endpoint: endpoint.into(),
            transport,
            page_size: 1000,
            retry: RetryPolicy::default(),
        }
    }

    /// URL of one page of median expectations for an indicator.
    pub fn page_url(
        &self,
        indicator: Indicator,
        start: TradingDate,
        end: TradingDate,
        skip: usize,
    ) -> String {
        let filter = format!(
            "Indicador eq '{}' and Data ge '{start}' and Data le '{end}' and baseCalculo eq 0",
            indicator.api_name()
        );
        let params = [
            ("$format", "json".to_string()),
            ("$select", "Indicador,Data,DataReferencia,Mediana,baseCalculo".to_string()),
            ("$filter", filter),
            ("$orderby", "Data asc".to_string()),
            ("$top", self.page_size.to_string()),
            ("$skip", skip.to_string()),
        ];
        let query: Vec<String> = params
            .iter()
            .map(|(k, v)| format!("{}={}", encode_component(k), encode_component(v)))
            .collect();
        format!("{}?{}", self.endpoint, query.join("&"))
    }

    fn get_with_retry(&self, url: &str) -> Result<String> {
        let attempts = self.retry.attempts.max(1);
        let mut last_status = None;
        let mut last_message = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            match self.transport.get(url) {
                Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp.body),
                Ok(resp) => {
                    last_status = Some(resp.status);
                    last_message = format!("server returned HTTP {}", resp.status);
                    let transient = resp.status >= 500 || resp.status == 429;
                    if !transient {
                        break;
                    }
                    log::warn!("{url}: HTTP {} (attempt {})", resp.status, attempt + 1);
                }
                Err(e) => {
                    last_status = None;
                    last_message = e;
                    log::warn!("{url}: {last_message} (attempt {})", attempt + 1);
                }
            }
        }
        Err(Error::Fetch {
            url: url.to_string(),
            status: last_status,
            message: format!("{last_message} after {attempts} attempt(s)"),
        })
    }

    /// All median records of one indicator, following pagination to the end.
    pub fn fetch_indicator(
        &self,
        indicator: Indicator,
        start: TradingDate,
        end: TradingDate,
    ) -> Result<Vec<FocusRecord>> {
        let mut out = Vec::new();
        let mut skip = 0;
        let mut url = self.page_url(indicator, start, end, skip);
        loop {
            let body = self.get_with_retry(&url)?;
            let page: Value = serde_json::from_str(&body).map_err(|e| Error::Payload {
                message: format!("invalid JSON from {url}: {e}"),
                record: body.chars().take(200).collect(),
            })?;
            let values = page
                .get("value")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Payload {
                    message: format!("response from {url} has no 'value' array"),
                    record: body.chars().take(200).collect(),
                })?;
            for v in values {
                if let Some(r) = parse_record(v, indicator)? {
                    out.push(r);
                }
            }
            if let Some(next) = page.get("@odata.nextLink").and_then(Value::as_str) {
                url = resolve_link(&self.endpoint, next);
            } else if values.len() >= self.page_size && !values.is_empty() {
                skip += values.len();
                url = self.page_url(indicator, start, end, skip);
            } else {
                break;
            }
        }
        Ok(out)
    }
}

fn resolve_link(endpoint: &str, link: &str) -> String {
    if link.starts_with("http://") || link.starts_with("https://") {
        link.to_string()
    } else {
        let base = endpoint.rsplit_once('/').map_or(endpoint, |(b, _)| b);
        format!("{base}/{}", link.trim_start_matches('/'))
    }
}

fn parse_record(v: &Value, expected: Indicator) -> Result<Option<FocusRecord>> {
    let bad = |message: &str| Error::Payload {
        message: message.to_string(),
        record: v.to_string(),
    };
    if let Some(base) = v.get("baseCalculo").and_then(Value::as_i64) {
        if base != 0 {
            return Ok(None);
        }
    }
    let name = v
        .get("Indicador")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing 'Indicador'"))?;
    if name != expected.api_name() {
        return Err(bad(&format!(
            "unexpected indicator '{name}' (expected '{}')",
            expected.api_name()
        )));
    }
    let survey_date: TradingDate = v
        .get("Data")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("missing 'Data'"))?
        .parse()
        .map_err(|_| bad("invalid 'Data'"))?;
    let reference_year = match v.get("DataReferencia") {
        Some(Value::String(s)) => s.trim().parse().map_err(|_| bad("invalid 'DataReferencia'"))?,
        Some(Value::Number(n)) => n
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .ok_or_else(|| bad("invalid 'DataReferencia'"))?,
        _ => return Err(bad("missing 'DataReferencia'")),
    };
    let median = v
        .get("Mediana")
        .and_then(Value::as_f64)
        .ok_or_else(|| bad("missing or non-numeric 'Mediana'"))?;
    Ok(Some(FocusRecord {
        survey_date,
        indicator: expected,
        reference_year,
        median,
    }))
}

/// Fetches every indicator (concurrently, one thread each) and merges the
/// pages into a deterministically ordered panel.
pub fn fetch_focus<T: HttpGet>(
    client: &FocusClient<T>,
    indicators: &[Indicator],
    start: TradingDate,
    end: TradingDate,
) -> Result<(FocusPanel, LoadReport)> {
    if start > end {
        return Err(Error::Config(format!(
            "Focus date range is empty ({start} > {end})"
        )));
    }
    let results: Vec<Result<Vec<FocusRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = indicators
            .iter()
            .map(|ind| scope.spawn(move || client.fetch_indicator(*ind, start, end)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fetch thread panicked"))
            .collect()
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(FocusPanel::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> TradingDate {
        TradingDate::from_ymd(y, m, day).unwrap()
    }

    fn rec(date: TradingDate, indicator: Indicator, year: i32, median: f64) -> FocusRecord {
        FocusRecord {
            survey_date: date,
            indicator,
            reference_year: year,
            median,
        }
    }

    #[test]
    fn horizon_column_names() {
        let cols = horizon_columns();
        assert_eq!(cols.len(), 20);
        assert_eq!(cols[0], "IPCA_year");
        assert_eq!(cols[3], "IPCA_year_3");
        assert_eq!(cols[19], "Nominal_year_3");
    }

    #[test]
    fn dedup_keeps_last() {
        let day = d(2004, 1, 2);
        let (p, rep) = FocusPanel::from_records(vec![
            rec(day, Indicator::Ipca, 2004, 5.9),
            rec(day, Indicator::Ipca, 2004, 6.0),
        ]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(day, Indicator::Ipca, 2004), Some(6.0));
        assert_eq!(rep.deduplicated, 1);
    }

    #[test]
    fn past_reference_year_rejected() {
        let (p, rep) = FocusPanel::from_records(vec![rec(d(2004, 1, 2), Indicator::Ipca, 2003, 9.0)]);
        assert!(p.is_empty());
        assert_eq!(rep.rejected, 1);
    }

    fn full_day(day: TradingDate, skip: Option<(Indicator, i32)>) -> Vec<FocusRecord> {
        let mut out = Vec::new();
        for i in Indicator::ALL {
            for k in 0..HORIZONS {
                if skip == Some((i, k)) {
                    continue;
                }
                out.push(rec(day, i, day.year() + k, 10.0 * k as f64 + i as i32 as f64));
            }
        }
        out
    }

    #[test]
    fn reshape_selic_row_and_drop() {
        let day = d(2025, 12, 18);
        let mut recs = full_day(day, None);
        for (k, v) in [15.00, 12.00, 10.50, 9.50].iter().enumerate() {
            recs.push(rec(day, Indicator::Selic, 2025 + k as i32, *v));
        }
        recs.extend(full_day(d(2025, 12, 19), Some((Indicator::Nominal, 3))));
        let (p, _) = FocusPanel::from_records(recs);
        let h = reshape_horizons(&p).unwrap();
        assert_eq!(h.dropped, 1);
        assert_eq!(h.frame.n_rows(), 1);
        let sel: Vec<f64> = (0..4)
            .map(|k| h.frame.column(&Indicator::Selic.horizon_column(k)).unwrap()[0])
            .collect();
        assert_eq!(sel, vec![15.00, 12.00, 10.50, 9.50]);
    }

    #[test]
    fn horizon_semantics_match_panel() {
        let mut recs = full_day(d(2010, 3, 1), None);
        recs.extend(full_day(d(2011, 3, 1), None));
        let (p, _) = FocusPanel::from_records(recs);
        let h = reshape_horizons(&p).unwrap();
        for (row, date) in h.frame.dates().iter().enumerate() {
            for i in Indicator::ALL {
                for k in 0..HORIZONS {
                    let cell = h.frame.column(&i.horizon_column(k)).unwrap()[row];
                    assert_eq!(Some(cell), p.get(*date, i, date.year() + k));
                }
            }
        }
    }

    #[test]
    fn url_encoding_is_stable() {
        struct Never;
        impl HttpGet for Never {
            fn get(&self, _: &str) -> std::result::Result<super::super::transport::HttpResponse, String> {
                Err("offline".into())
            }
        }
        let c = FocusClient::new("https://example.test/odata/Res", Never);
        let u = c.page_url(Indicator::Primario, d(2004, 1, 1), d(2004, 1, 31), 0);
        assert!(u.starts_with("https://example.test/odata/Res?$format=json&"));
        assert!(u.contains("Resultado%20prim%C3%A1rio"));
        assert!(u.ends_with("$top=1000&$skip=0"));
    }

    #[test]
    fn relative_next_link() {
        assert_eq!(
            resolve_link("https://h/a/b/Res", "Res?$skip=10"),
            "https://h/a/b/Res?$skip=10"
        );
        assert_eq!(resolve_link("https://h/Res", "https://x/y"), "https://x/y");
    }
}
