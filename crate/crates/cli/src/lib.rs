//! Reproducible experiments over `randwalk-core`: each run is a pure
//! function of its config and writes versioned CSVs plus a manifest.

pub mod config;
pub mod output;
pub mod rate;
pub mod runner;

pub use config::{parse_grid, Experiment, ExperimentConfig};
pub use output::{csv_header_line, Table, CSV_VERSION};
pub use rate::{fit_rate, RateFit};
pub use runner::{config_hash, run_experiment, RunOutput};

use randwalk::Error;

/// Process exit code for an error: 2 for configuration problems, 3 for
/// numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::Io(_) => 2,
        _ => 3,
    }
}
