//! Decomposition of daily changes in 5-year DI futures into macro,
//! domestic-risk and global-risk contributions in basis points.
//!
//! The pipeline: daily transforms ([`series`]), a supervised one-component
//! PLS macro factor ([`pls`]), a global/domestic split of CDS returns
//! ([`cds`]), and a final OLS attribution with cumulative accounting
//! ([`decomposition`]). [`pipeline`] wires the stages together and writes
//! the reports.

pub mod cds;
pub mod decomposition;
pub mod error;
pub mod ingestion;
pub mod linalg;
pub mod pipeline;
pub mod pls;
pub mod regression;
pub mod series;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
