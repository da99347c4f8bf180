//! Job configuration, the end-to-end pipeline and the report it produces.

mod config;
mod report;
mod run;

pub use config::{parse_delta, JobConfig, LyInput, MapSpec};
pub use report::{
    dec, export_table, parse_table_json, write_table, MapSummary, Report, Status, TableFormat,
    TableRecord,
};
pub use run::{run_certify, run_certify_escape, run_certify_mixing, Outcome};
