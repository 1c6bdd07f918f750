use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sr_lab::config::{ANGLE_PRESETS, KINDS, MODELS, OBSERVABLE_PRESETS};
use sr_lab::{emit_report, run_experiment, ExperimentConfig, Format, LabError};

#[derive(Parser)]
#[command(name = "sr-lab", version, about = "Seeded semantic-realism measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file (or a stored report).
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Record the wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// List built-in models, angle sets and observable presets.
    Presets,
}

fn run(config: PathBuf, seed: Option<u64>, trials: Option<u64>, format: Option<Format>, output: Option<PathBuf>, timing: bool) -> Result<(), LabError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if format.is_some() || output.is_some() {
        let out = cfg.output.get_or_insert_with(Default::default);
        if format.is_some() {
            out.format = format;
        }
        if output.is_some() {
            out.path = output;
        }
    }
    cfg.validate()?;
    let format = cfg.output.as_ref().and_then(|o| o.format).unwrap_or_default();
    let path = cfg.output.as_ref().and_then(|o| o.path.clone());
    let start = Instant::now();
    let mut report = run_experiment(cfg)?;
    if timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let bytes = emit_report(&report, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn presets() {
    println!("experiments:");
    for k in KINDS {
        println!("  {k}");
    }
    println!("models:");
    for (name, about) in MODELS {
        println!("  {name:<18} {about}");
    }
    println!("angle sets (a, a', b, b' in degrees):");
    for (name, deg) in ANGLE_PRESETS {
        println!("  {name:<18} {deg:?}");
    }
    println!("observables:");
    for o in OBSERVABLE_PRESETS {
        println!("  {o}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            presets();
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, trials, format, output, timing } => match run(config, seed, trials, format, output, timing) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("sr-lab: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
