//! `entlab`: scenario runner for the two-body entanglement laboratory.
//!
//! Three subcommands: `run` executes a TOML-configured scenario (or a
//! bundled preset by name) and writes a CSV trace plus a JSON report,
//! `verify` runs the built-in check suites, and `presets` lists or prints
//! the bundled configurations.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 unusable config or
//! arguments, 3 numerical precondition violated, 4 I/O failure.

// Validation sites spell `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN, which must never pass a precondition.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod presets;
mod report;
mod runner;
mod verify;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_config, Mode, ScenarioConfig};
use report::RunReport;
use runner::CliError;

#[derive(Parser)]
#[command(
    name = "entlab",
    version,
    about = "Bipartite quantum dynamics scenarios with built-in pass/fail checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML config file or a bundled preset name.
    Run {
        /// Path to a config file; a bare preset name works too.
        config: String,
    },
    /// Run the built-in check suites and write verify.report.json.
    Verify {
        /// Case-insensitive substring selecting which suites run.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Inspect the bundled scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List preset names with one-line summaries.
    List,
    /// Print a preset's full TOML text.
    Show { name: String },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config } => {
            let (scenario_id, cfg) = resolve_run_target(&config)?;
            let report = match cfg.mode {
                Mode::Verify => {
                    let filter = cfg.verify.as_ref().and_then(|v| v.filter.clone());
                    verify::run_verify(filter.as_deref(), cfg.seed)?
                }
                _ => {
                    let report = runner::run_scenario(&cfg, &scenario_id)?;
                    print_run_report(&report);
                    report
                }
            };
            Ok(exit_for(&report))
        }
        Command::Verify { filter } => {
            let report = verify::run_verify(filter.as_deref(), verify::DEFAULT_SEED)?;
            Ok(exit_for(&report))
        }
        Command::Presets { action } => match action {
            PresetsAction::List => {
                for preset in presets::PRESETS {
                    println!("{:<24} {}", preset.name, preset.summary);
                }
                Ok(ExitCode::SUCCESS)
            }
            PresetsAction::Show { name } => match presets::find(&name) {
                Some(preset) => {
                    print!("{}", preset.text);
                    Ok(ExitCode::SUCCESS)
                }
                None => Err(CliError::Config(format!(
                    "unknown preset \"{name}\"; `entlab presets list` shows what is bundled"
                ))),
            },
        },
    }
}

fn exit_for(report: &RunReport) -> ExitCode {
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// `run` accepts either a config file path or a preset name, with the file
/// winning when both could apply.
fn resolve_run_target(arg: &str) -> Result<(String, ScenarioConfig), CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let config = load_config(path).map_err(CliError::Config)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| arg.to_string());
        return Ok((id, config));
    }
    if let Some(preset) = presets::find(arg) {
        let config = presets::parse(preset).map_err(CliError::Config)?;
        return Ok((preset.name.to_string(), config));
    }
    Err(CliError::Config(format!(
        "config file {arg} does not exist and matches no preset name"
    )))
}

fn print_run_report(report: &RunReport) {
    for check in &report.checks {
        println!(
            "[{}] {}: measured {:.6e} (threshold {:.6e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.measured,
            check.threshold
        );
    }
    println!(
        "{}: {} in {:.2}s",
        report.scenario,
        if report.passed {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        },
        report.wall_time_seconds
    );
}
