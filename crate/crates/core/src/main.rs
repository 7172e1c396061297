use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use naturalbc::cli::{
    emit_plots, presets, resolve_output_dir, run_scenario, run_sweep, CheckStatus, ScenarioConfig, SweepParam,
};

#[derive(Parser)]
#[command(version, about = "Natural boundary conditions and seam quantization for Klein-Gordon fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks listed in a scenario file
    Run {
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir or name under $NATURALBC_OUTPUT_ROOT)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Trace and quantize a scenario over a list of parameter values
    Sweep {
        config: PathBuf,
        /// l, alpha or amplitude
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write gnuplot scripts for the data files listed in a manifest
    Plot { manifest: PathBuf },
    /// List the field presets
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cmd: Command) -> naturalbc::Result<ExitCode> {
    match cmd {
        Command::Run { config, output } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let dir = resolve_output_dir(&cfg, output.as_deref());
            let out = run_scenario(&cfg, &dir)?;
            for v in &out.manifest.verdicts {
                println!("{:<13} {:<8} {}", v.check.name(), status_label(v.status), v.summary);
            }
            println!("wrote {} files to {}", out.manifest.files.len(), dir.display());
            Ok(if out.manifest.any_errors() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Sweep {
            config,
            param,
            values,
            output,
        } => {
            let cfg = ScenarioConfig::from_path(&config)?;
            let dir = resolve_output_dir(&cfg, output.as_deref());
            let manifest = run_sweep(&cfg, param, &values, &dir)?;
            print!("{}", std::fs::read_to_string(dir.join("sweep.csv"))?);
            Ok(if manifest.any_errors() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Plot { manifest } => {
            let set = emit_plots(&manifest)?;
            for s in &set.scripts {
                println!("{}", s.display());
            }
            for n in &set.notes {
                println!("note: {n}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for (name, desc) in presets() {
                println!("{name:<20} {desc}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn status_label(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Passed => "passed",
        CheckStatus::Failed => "failed",
        CheckStatus::Error => "ERROR",
        CheckStatus::Skipped => "skipped",
    }
}
