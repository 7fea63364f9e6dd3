//! Verification runner: configuration, execution and report rendering.

pub mod config;
pub mod emit;
pub mod runner;

use std::fs;
use std::path::Path;

use chlax_core::reduction::{export_cases, import_cases, CaseSpec};

pub use config::{CaseFilter, ConfigError, Format, RunConfig};
pub use emit::{emit, parse_json};
pub use runner::{run, run_with_registry, Report, Verdict};

/// Writes a case registry as JSON.
pub fn write_registry(path: &Path, cases: &[CaseSpec]) -> Result<(), ConfigError> {
    fs::write(path, export_cases(cases) + "\n").map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Reads a case registry written by [`write_registry`].
pub fn read_registry(path: &Path) -> Result<Vec<CaseSpec>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    import_cases(&text).map_err(|e| ConfigError::Registry(e.to_string()))
}
