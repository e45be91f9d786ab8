//! Independent runs of many scenarios with a shared summary.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::ConfigError;
use crate::read_source;
use crate::scenario::{self, write_atomic, DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub source: String,
    pub verdict: String,
    pub exit_code: i32,
    pub collapse_time: Option<f64>,
    pub conv_dist: Option<f64>,
    pub length_gap: Option<f64>,
    pub theta_max_final: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Expands directories to their `*.toml` files (sorted); other arguments
/// are taken as files or preset names.
pub fn expand(inputs: &[String]) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    for arg in inputs {
        let path = Path::new(arg);
        if path.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| ConfigError {
                    message: format!("cannot list {arg}: {e}"),
                    line: None,
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            files.sort();
            out.extend(files.into_iter().map(|p| p.to_string_lossy().into_owned()));
        } else {
            out.push(arg.clone());
        }
    }
    Ok(out)
}

fn run_one(arg: &str) -> SummaryRow {
    let failed = |source: String, message: String| SummaryRow {
        scenario: arg.to_string(),
        source,
        verdict: "invalid".into(),
        exit_code: 2,
        collapse_time: None,
        conv_dist: None,
        length_gap: None,
        theta_max_final: None,
        wall_time_s: 0.0,
        error: Some(message),
    };
    let (source, text) = match read_source(arg) {
        Ok(v) => v,
        Err(e) => return failed(arg.to_string(), e.to_string()),
    };
    let label = source.to_string();
    let sc = match scenario::load(&text) {
        Ok(sc) => sc,
        Err(e) => return failed(label, e.to_string()),
    };
    match scenario::run_scenario(&sc) {
        Ok(out) => SummaryRow {
            scenario: out.report.scenario.clone(),
            source: label,
            verdict: out.report.verdict.clone(),
            exit_code: out.exit_code,
            collapse_time: out.report.collapse_time,
            conv_dist: out.report.conv_dist,
            length_gap: out.report.length_gap,
            theta_max_final: out.record.as_ref().map(|_| out.report.theta_max_final),
            wall_time_s: out.wall_time_s,
            error: out.report.error.clone(),
        },
        Err(e) => {
            let mut row = failed(label, format!("writing outputs: {e}"));
            row.scenario = sc.config.name.clone();
            row
        }
    }
}

/// Runs every input on up to `jobs` threads; rows keep the input order.
pub fn run_batch(inputs: &[String], jobs: usize) -> Vec<SummaryRow> {
    let slots: Vec<Mutex<Option<SummaryRow>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, inputs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= inputs.len() {
                    break;
                }
                let row = run_one(&inputs[k]);
                *slots[k].lock().expect("slot lock") = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every input ran"))
        .collect()
}

pub fn exit_code(rows: &[SummaryRow]) -> i32 {
    rows.iter().map(|r| r.exit_code).max().unwrap_or(2)
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

/// Fixed-width text table of the summary.
pub fn pretty(rows: &[SummaryRow]) -> String {
    let header = [
        "scenario",
        "verdict",
        "exit",
        "collapse_t",
        "conv_dist",
        "length_gap",
        "theta_max",
        "wall_s",
    ];
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.scenario.clone(),
                r.verdict.clone(),
                r.exit_code.to_string(),
                num(r.collapse_time),
                num(r.conv_dist),
                num(r.length_gap),
                num(r.theta_max_final),
                format!("{:.2}", r.wall_time_s),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &[String]| {
        row.iter()
            .zip(&width)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    out.push_str(&line(&width.map(|w| "-".repeat(w))));
    out.push('\n');
    for (row, r) in cells.iter().zip(rows) {
        out.push_str(&line(row));
        out.push('\n');
        if let Some(e) = &r.error {
            out.push_str(&format!("  {}: {e}\n", r.scenario));
        }
    }
    out
}

/// Summary file location: the output directory override or the default.
pub fn summary_path() -> PathBuf {
    let dir = std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    dir.join("batch_summary.csv")
}

pub fn write_summary(rows: &[SummaryRow]) -> std::io::Result<PathBuf> {
    let path = summary_path();
    let bytes = summary_csv(rows).map_err(std::io::Error::other)?;
    write_atomic(&path, &bytes)?;
    Ok(path)
}
