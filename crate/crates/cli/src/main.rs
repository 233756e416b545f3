use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multicontact_cli::commands::{self, Failure, Format, Output, EXIT_INPUT};
use multicontact_cli::system::System;

#[derive(Parser)]
#[command(name = "multicontact", version, about = "Classify, derive, transform and simulate multicontact field theories")]
struct Cli {
    /// Directory for output files; stdout only when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the random probe points of numeric rank checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the structure verdict, ranks, Reeb fields and dissipation form.
    Classify { system: PathBuf },
    /// Print the Herglotz or de Donder-Weyl field equations.
    Derive { system: PathBuf },
    /// Print the Legendre map and the transformed Hamiltonian.
    Legendre { system: PathBuf },
    /// Integrate the system's simulation block.
    Simulate { system: PathBuf },
    /// Run every structural and numerical check.
    Verify { system: PathBuf },
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let path = match &cli.command {
        Command::Classify { system } | Command::Derive { system } | Command::Legendre { system } | Command::Simulate { system } | Command::Verify { system } => system,
    };
    let sys = System::load(path).map_err(|e| Failure::Input(e.to_string()))?;
    match cli.command {
        Command::Classify { .. } => commands::classify(&sys, cli.format),
        Command::Derive { .. } => commands::derive(&sys, cli.format),
        Command::Legendre { .. } => commands::legendre(&sys, cli.format),
        Command::Simulate { .. } => commands::simulate(&sys),
        Command::Verify { .. } => commands::verify(&sys, cli.format),
    }
}

fn write_files(dir: &Path, output: &Output) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &output.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        multicontact::symexpr::set_probe_seed(seed);
    }
    match execute(&cli) {
        Ok(output) => {
            if let Some(dir) = &cli.out {
                if let Err(e) = write_files(dir, &output) {
                    eprintln!("error: cannot write {}: {e}", dir.display());
                    return ExitCode::from(EXIT_INPUT as u8);
                }
            }
            print!("{}", output.stdout);
            if !output.stdout.ends_with('\n') {
                println!();
            }
            ExitCode::from(output.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
