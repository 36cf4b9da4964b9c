use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmvsim::cli::{execute, list, verify, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cmvsim", version, about = "Conditional McKean-Vlasov simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered experiments.
    List,
    /// Recompute the verdicts of a stored report.
    Verify { report: PathBuf },
}

fn run(cli: Cli) -> cmvsim::Result<bool> {
    match cli.command {
        Command::Run { config, seed, workers, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply_env()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if out.is_some() {
                cfg.out = out;
            }
            let (report, dir) = execute(&cfg)?;
            print!("{}", report.summary());
            eprintln!("wrote {}", dir.display());
            Ok(report.all_pass())
        }
        Command::List => {
            print!("{}", list());
            Ok(true)
        }
        Command::Verify { report } => {
            let v = verify(&report)?;
            for verdict in &v.verdicts {
                println!("{}: {}", if verdict.pass { "PASS" } else { "FAIL" }, verdict.criterion);
            }
            if !v.consistent {
                println!("stored verdicts differ from the recomputed ones");
            }
            Ok(v.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
