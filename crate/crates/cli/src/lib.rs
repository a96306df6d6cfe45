//! Experiment driver behind the `qab` binary: configuration, orchestration
//! and CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Geodesic,
    Sweep,
    CurvatureMap,
    Observables,
    Verify,
}

/// Flag values that override top-level config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub steps: Option<usize>,
}

/// Reads the config (defaults when `path` is `None`), applies overrides and
/// validates.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &overrides.out {
        cfg.out = out.clone();
    }
    if let Some(t) = overrides.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = overrides.steps {
        cfg.steps_per_unit = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and writes its outputs. Returns the lines to print.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    if command == Command::Verify {
        return run_verify(cfg);
    }
    let run = match command {
        Command::Geodesic => commands::geodesic(cfg)?,
        Command::Sweep => commands::sweep(cfg)?,
        Command::CurvatureMap => commands::curvature_map(cfg)?,
        Command::Observables => commands::observables(cfg)?,
        Command::Verify => unreachable!(),
    };
    let failed = run.failed();
    let manifest = run.finish(&cfg.out)?;
    let mut lines: Vec<String> = manifest
        .tasks
        .iter()
        .map(|t| match &t.error {
            Some(e) => format!("{:<24} {} ({e})", t.name, t.status),
            None => format!("{:<24} {}", t.name, t.status),
        })
        .collect();
    lines.push(format!("wrote {} files to {}", manifest.files.len() + 1, cfg.out.display()));
    if failed {
        for l in &lines {
            eprintln!("{l}");
        }
        let names: Vec<&str> = manifest.tasks.iter().filter(|t| t.status != "ok").map(|t| t.name.as_str()).collect();
        return Err(CliError::Numerical(format!("failed tasks: {}", names.join(", "))));
    }
    Ok(lines)
}

fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let mut run = output::Run::new("verify", cfg);
    let checks = run.task("checks", || Ok::<_, String>(verify::run_checks(cfg))).unwrap_or_default();
    let lines: Vec<String> = checks
        .iter()
        .map(|c| {
            let value = c.value.map(|v| format!("{v:.3e}")).or_else(|| c.error.clone()).unwrap_or_default();
            format!("{} {:<28} {value} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.tolerance)
        })
        .collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !failed.is_empty() {
        run.fail_last(format!("failed checks: {}", failed.join(", ")));
    }
    run.json("verify_report.json", &serde_json::json!({ "checks": checks }))?;
    run.finish(&cfg.out)?;
    if !failed.is_empty() {
        for l in &lines {
            eprintln!("{l}");
        }
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(lines)
}
