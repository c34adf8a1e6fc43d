//! Dataset ingestion, run configuration, reports and the command line.

pub mod app;
pub mod config;
pub mod csv;
pub mod dataset;
pub mod manifest;
pub mod report;

pub use config::{parse_weights, read_pool, RunConfig};
pub use dataset::{load_dataset, Dataset, DatasetPaths};
pub use manifest::{Manifest, RunWriter};
pub use report::{DiagnoseReport, StoredReport};
