//! Data acquisition: Focus expectations over HTTP and market data from CSV.

pub mod focus;
pub mod market;
pub mod transport;

pub use focus::{
    fetch_focus, horizon_columns, reshape_horizons, FocusClient, FocusPanel, FocusRecord,
    HorizonFrame, Indicator, LoadReport, RetryPolicy, DEFAULT_ENDPOINT,
};
pub use market::{
    load_market_csv, read_wide_csv, write_wide_csv, CsvLoadReport, CsvSchema, MarketDataset,
};
pub use transport::{HttpGet, HttpResponse, RecordedTransport, Recording, RecordingTransport, UreqTransport};
