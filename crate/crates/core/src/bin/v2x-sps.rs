use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use v2x_sps::experiment::{resolve_seed, run_experiment, run_sweep};
use v2x_sps::validate::validate_assignment_file;
use v2x_sps::ExperimentConfig;

/// Graph-matching semi-persistent scheduling simulator for C-V2X mode-3.
///
/// Log verbosity follows V2X_SPS_LOG (e.g. `debug`), defaulting to `info`.
#[derive(Debug, Parser)]
#[command(name = "v2x-sps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write CDF/criteria artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides `master_seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep cluster sizes and record the mean worst-vehicle rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an assignment CSV for duplicate vehicles and shared subframes.
    Validate {
        file: PathBuf,
        /// Subchannels per subframe; enables cross-checking the subframe column.
        #[arg(long)]
        k: Option<usize>,
    },
}

fn load(config: &Path, out: Option<PathBuf>) -> v2x_sps::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn execute(command: Command) -> v2x_sps::Result<bool> {
    match command {
        Command::Run { config, seed, out } => load(&config, out).and_then(|mut cfg| {
            let source = resolve_seed(&mut cfg, seed);
            log::info!(
                "master seed {} ({source:?})",
                cfg.master_seed.unwrap_or_default()
            );
            let artifacts = run_experiment(&cfg, source)?;
            for f in &artifacts.files {
                println!("{}", artifacts.dir.join(f).display());
            }
            Ok(true)
        }),
        Command::Sweep { config, seed, out } => load(&config, out).and_then(|mut cfg| {
            let source = resolve_seed(&mut cfg, seed);
            log::info!(
                "master seed {} ({source:?})",
                cfg.master_seed.unwrap_or_default()
            );
            let artifacts = run_sweep(&cfg, source)?;
            for f in &artifacts.files {
                println!("{}", artifacts.dir.join(f).display());
            }
            Ok(true)
        }),
        Command::Validate { file, k } => validate_assignment_file(&file, k).map(|report| {
            print!("{report}");
            if report.is_ok() {
                println!();
            }
            report.is_ok()
        }),
    }
}

/// 0 on success, 1 when validation finds violations, 2 on any error.
fn exit_code(result: &v2x_sps::Result<bool>) -> u8 {
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(_) => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("V2X_SPS_LOG", "info")).init();
    let result = execute(Cli::parse().command);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result))
}
