use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skinwave::{presets, run_config_file, run_preset, Overrides};
use skinwave_core::evolve::Method;

#[derive(Parser)]
#[command(
    name = "skinwave",
    version,
    about = "Wave packets in open-boundary non-Hermitian chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Propagation method: spectral, expm or auto.
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Skip the heatmap.
    #[arg(long, global = true)]
    no_heatmap: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in experiment.
    Preset { name: String },
    /// Run an experiment described by a TOML config file.
    Run { config: PathBuf },
    /// List the built-in experiments.
    ListPresets,
    /// Print a built-in experiment as a TOML config.
    Config { name: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        out: cli.out,
        method: cli.method,
        no_heatmap: cli.no_heatmap,
    };
    let result = match cli.command {
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<16} {}", p.name, p.summary);
            }
            return ExitCode::SUCCESS;
        }
        Command::Config { name } => {
            match presets::preset_config(&name).and_then(|mut c| {
                overrides.apply(&mut c);
                c.to_toml()
            }) {
                Ok(text) => {
                    print!("{text}");
                    return ExitCode::SUCCESS;
                }
                Err(e) => Err(e),
            }
        }
        Command::Preset { name } => run_preset(&name, &overrides),
        Command::Run { config } => run_config_file(&config, &overrides),
    };
    match result {
        Ok(done) => {
            print!("{}", done.report.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
