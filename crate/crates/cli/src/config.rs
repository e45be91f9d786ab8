//! Scenario files: TOML with `[space]`, `[initial]`, `[integrator]`,
//! `[diagnostics]`, `[output]` and optional `[tolerances]` tables.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cyclic_pursuit::spaces::OracleSelector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Collapsed,
    Converged,
    /// Either decided verdict; undecided runs still fail.
    Any,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_expect")]
    pub expect: Expectation,
    pub space: SpaceConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesSection>,
}

fn default_expect() -> Expectation {
    Expectation::Any
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Euclidean {
        dim: usize,
    },
    Torus {
        periods: Vec<f64>,
    },
    Mobius {
        length: f64,
        half_width: f64,
    },
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    Rp2 {
        #[serde(default = "one")]
        radius: f64,
    },
    Dumbbell,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Points {
        points: Vec<Vec<f64>>,
    },
    /// Regular polygon in the first two coordinates.
    RegularNgon {
        n: usize,
        radius: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// Independent uniform points in `[0, side]^d`.
    RandomCube {
        n: usize,
        #[serde(default = "one")]
        side: f64,
        seed: u64,
    },
    /// Points spread along the diagnostics oracle, pushed off it along the
    /// normal by up to `noise`.
    GeodesicPerturbed {
        n: usize,
        noise: f64,
        seed: u64,
    },
    /// Uniform points in the spherical cap of angular radius `angle`.
    RandomCap {
        n: usize,
        angle: f64,
        seed: u64,
        #[serde(default = "north")]
        center: [f64; 3],
    },
}

fn north() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_eps: Option<f64>,
    #[serde(default = "default_step_safety")]
    pub step_safety: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_dt_max() -> f64 {
    1e-2
}
fn default_step_safety() -> f64 {
    0.1
}
fn default_t_max() -> f64 {
    100.0
}
fn default_record_every() -> usize {
    1
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            dt_max: default_dt_max(),
            capture_eps: None,
            step_safety: default_step_safety(),
            t_max: default_t_max(),
            record_every: default_record_every(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    TorusClass {
        class: Vec<i64>,
    },
    GreatCircle {
        normal: [f64; 3],
    },
    ProjectedGreatCircle {
        normal: [f64; 3],
    },
    Neck,
    MobiusCore,
    Circle {
        center: Vec<f64>,
        radius: f64,
        e1: Vec<f64>,
        e2: Vec<f64>,
    },
}

impl OracleConfig {
    pub fn selector(&self) -> OracleSelector<f64> {
        match self.clone() {
            OracleConfig::TorusClass { class } => OracleSelector::TorusClass(class),
            OracleConfig::GreatCircle { normal } => OracleSelector::GreatCircle { normal },
            OracleConfig::ProjectedGreatCircle { normal } => {
                OracleSelector::ProjectedGreatCircle { normal }
            }
            OracleConfig::Neck => OracleSelector::Neck,
            OracleConfig::MobiusCore => OracleSelector::MobiusCore,
            OracleConfig::Circle {
                center,
                radius,
                e1,
                e2,
            } => OracleSelector::Circle {
                center,
                radius,
                e1,
                e2,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapConfig {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Tube around the diagnostics oracle.
    Tube {
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_conv_rel")]
    pub conv_rel: f64,
    #[serde(default = "default_length_rel")]
    pub length_rel: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapConfig>,
    /// Expected collapse time; a collapse outside the tolerance fails the
    /// expectation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_time: Option<f64>,
    #[serde(default = "default_collapse_tol")]
    pub collapse_time_tol: f64,
}

fn default_grid() -> usize {
    512
}
fn default_conv_rel() -> f64 {
    5e-3
}
fn default_length_rel() -> f64 {
    1e-3
}
fn default_collapse_tol() -> f64 {
    1e-3
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            oracle: None,
            grid: default_grid(),
            conv_rel: default_conv_rel(),
            length_rel: default_length_rel(),
            trap: None,
            collapse_time: None,
            collapse_time_tol: default_collapse_tol(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; overridden by `PURSUIT_OUTPUT_DIR`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    pub point_eq: Option<f64>,
    pub shooting_residual: Option<f64>,
    pub fd_step: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub shooting_restarts: Option<usize>,
}

/// Parse or validation failure, with the offending line when known.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key = ...` inside `[table]` (or the top level when
/// `table` is empty).
pub fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut table_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == table {
                table_line = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    table_line
}

impl ScenarioConfig {
    /// SHA-256 of the canonical JSON echo of the resolved config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses TOML into a config without semantic checks.
pub fn parse_toml(text: &str) -> Result<ScenarioConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let start = e.span().map_or(0, |s| s.start.min(text.len()));
        let mut line = e.span().map(|_| text[..start].matches('\n').count() + 1);
        // Tagged tables report the whole table; point at the offending key.
        if let Some(key) = e
            .message()
            .strip_prefix("unknown field `")
            .and_then(|m| m.split('`').next())
        {
            let from = line.unwrap_or(1);
            if let Some(k) = text.lines().enumerate().skip(from - 1).find_map(|(i, l)| {
                let (name, _) = l.split_once('=')?;
                (name.trim() == key).then_some(i + 1)
            }) {
                line = Some(k);
            }
        }
        ConfigError {
            message: e.message().to_string(),
            line,
        }
    })
}
