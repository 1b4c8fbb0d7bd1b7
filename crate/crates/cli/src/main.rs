use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "gff-lab", version, about = "Spectral SPDE and Gaussian free field experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Worker threads; results do not depend on this.
        #[arg(long, env = "GFFLAB_JOBS", default_value_t = 1)]
        jobs: usize,
        /// Overrides `mc.seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix; files are `<prefix>_<experiment>.csv` and `<prefix>_summary.json`.
        #[arg(long)]
        out: Option<String>,
    },
    /// List available experiments.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { gff_lab::EXIT_CONFIG } else { gff_lab::EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Run { config, jobs, seed, out } => {
            gff_lab::run(&gff_lab::RunOptions { config_path: config, jobs, seed, out })
        }
        Command::List => {
            print!("{}", gff_lab::list_experiments());
            gff_lab::EXIT_PASS
        }
    };
    ExitCode::from(code as u8)
}
