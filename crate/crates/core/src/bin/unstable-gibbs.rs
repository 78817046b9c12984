use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use unstable_gibbs::cli::{self, Command};

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Measure,
    Pressure,
    Oracle,
}

/// Gibbs measures of hyperbolic attractors from weighted unstable-curve volume.
#[derive(Parser)]
#[command(name = "unstable-gibbs", version)]
struct Args {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let command = match args.mode {
        Mode::Measure => Command::Measure,
        Mode::Pressure => Command::Pressure,
        Mode::Oracle => Command::Oracle,
    };
    match cli::run(command, &args.config, args.out.as_deref()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("unstable-gibbs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
