use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use pursuit_cli::{batch, presets, read_source, scenario};

/// Cyclic pursuit on Riemannian manifolds.
///
/// Outputs go to `PURSUIT_OUTPUT_DIR` when set, else the scenario's
/// `output.dir`, else `pursuit-out`.
#[derive(Parser)]
#[command(name = "pursuit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a TOML file or a preset name).
    Run { config: String },
    /// Run scenarios from directories, files or preset names.
    Batch {
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Inspect the shipped presets.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    List,
    /// Print a preset's TOML.
    Emit {
        name: String,
    },
}

fn run(config: &str) -> anyhow::Result<i32> {
    let (source, text) = match read_source(config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    let sc = match scenario::load(&text) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {source}: {e}");
            return Ok(2);
        }
    };
    let out = scenario::run_scenario(&sc).context("writing outputs")?;
    let r = &out.report;
    let mut line = format!("{}: {} (expected {:?})", r.scenario, r.verdict, r.expected);
    if let Some(t) = r.collapse_time {
        line.push_str(&format!(" collapse_time={t:.6}"));
    }
    if let Some(d) = r.conv_dist {
        line.push_str(&format!(" conv_dist={d:.3e}"));
    }
    if let Some(g) = r.length_gap {
        line.push_str(&format!(" length_gap={g:.3e}"));
    }
    println!("{line}");
    for f in &r.failures {
        println!("  failed: {f}");
    }
    if let Some(e) = &r.error {
        eprintln!("error: {e}");
    }
    println!("  report: {}", out.outputs.report.display());
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => run(&config).unwrap_or_else(|e| {
            eprintln!("error: {e:#}");
            2
        }),
        Command::Batch { inputs, jobs } => match batch::expand(&inputs) {
            Ok(list) if list.is_empty() => {
                eprintln!("error: no scenarios found in {}", inputs.join(" "));
                2
            }
            Ok(list) => {
                let rows = batch::run_batch(&list, jobs);
                print!("{}", batch::pretty(&rows));
                match batch::write_summary(&rows) {
                    Ok(path) => {
                        println!("summary: {}", path.display());
                        batch::exit_code(&rows)
                    }
                    Err(e) => {
                        eprintln!("error: writing summary: {e}");
                        2
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Presets { command } => match command {
            PresetCommand::List => {
                let w = presets::PRESETS
                    .iter()
                    .map(|p| p.name.len())
                    .max()
                    .unwrap_or(0);
                for p in presets::PRESETS {
                    println!("{:<w$}  {}", p.name, p.summary);
                }
                0
            }
            PresetCommand::Emit { name } => match presets::find(&name) {
                Some(p) => {
                    print!("{}", p.text);
                    0
                }
                None => {
                    eprintln!("error: unknown preset {name}; see `pursuit presets list`");
                    2
                }
            },
        },
    };
    ExitCode::from(code as u8)
}
