//! Library surface of the `winfree` command-line tool, split out so the
//! sweep machinery, configuration resolution and CSV conventions are
//! directly testable.

pub mod commands;
pub mod config;
pub mod csvout;
pub mod sweep;

pub use config::{build_run_config, CommonOpts, Grid, RunConfig};
pub use csvout::{csv_body, fmt_float, sidecar_path};
