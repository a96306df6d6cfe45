use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qab_cli::{execute, load_config, CliError, Command, Overrides};

#[derive(Parser)]
#[command(name = "qab", version, about = "Geodesic adiabatic paths: construction, propagation and diagnostics")]
struct Cli {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Propagation steps per unit s (overrides `steps_per_unit`).
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the requested paths and write them as CSV.
    Geodesic,
    /// Final-time error over a grid of total times.
    Sweep,
    /// R1212 over a rectangular grid, with path overlays.
    CurvatureMap,
    /// Gap, curvature and entanglement along each path.
    Observables,
    /// Consistency checks across modules.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Geodesic => Command::Geodesic,
        Cmd::Sweep => Command::Sweep,
        Cmd::CurvatureMap => Command::CurvatureMap,
        Cmd::Observables => Command::Observables,
        Cmd::Verify => Command::Verify,
    };
    let overrides = Overrides { out: cli.out, threads: cli.threads, steps: cli.steps };
    let result = load_config(cli.config.as_deref(), &overrides).and_then(|cfg| {
        if let Some(k) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
        execute(command, &cfg)
    });
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
