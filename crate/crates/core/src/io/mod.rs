//! Configuration, diagnostics CSV and grid snapshot formats.

pub mod config;
pub mod csv;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, ExperimentParams, InitialSpec, RunConfig};
pub use csv::{format_g17, read_csv, read_csv_from, write_csv, write_csv_to, write_results_csv, write_results_csv_to};
pub use snapshot::{read_snapshot, read_snapshot_from, write_snapshot, write_snapshot_to, SnapshotHeader, SNAPSHOT_MAGIC};
