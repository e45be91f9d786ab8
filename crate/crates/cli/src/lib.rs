//! Scenario files, presets, single and batch runs for the `pursuit` binary.

// `!(x > a)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod presets;
pub mod scenario;

pub use config::{parse_toml, ConfigError, Expectation, ScenarioConfig};
pub use scenario::{build, load, run_scenario, run_scenario_in, Outcome, Report, Scenario};

use std::path::Path;

/// Where a scenario came from, for messages and summaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    File(std::path::PathBuf),
    Preset(&'static str),
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::File(p) => write!(f, "{}", p.display()),
            Source::Preset(name) => write!(f, "preset:{name}"),
        }
    }
}

/// Reads a scenario from a file path, or from a preset when no such file
/// exists and the argument names one.
pub fn read_source(arg: &str) -> Result<(Source, String), ConfigError> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path)
            .map(|text| (Source::File(path.to_path_buf()), text))
            .map_err(|e| ConfigError {
                message: format!("cannot read {arg}: {e}"),
                line: None,
            });
    }
    let name = arg.strip_prefix("preset:").unwrap_or(arg);
    match presets::find(name) {
        Some(p) => Ok((Source::Preset(p.name), p.text.to_string())),
        None => Err(ConfigError {
            message: format!("{arg}: no such file or preset"),
            line: None,
        }),
    }
}
