use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use gauss_holder::symlin::DEFAULT_TOL;
use gauss_holder_cli::region::emit_region_plotdata;
use gauss_holder_cli::report::Report;
use gauss_holder_cli::run::{check_file, RunOptions};
use gauss_holder_cli::sweep::{sweep, thread_count};

#[derive(Parser)]
#[command(name = "gauss-holder", version, about = "Decide and verify Gaussian Hölder-type inequalities")]
struct Cli {
    /// PSD tolerance for the matrix criteria
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Replace every Monte Carlo seed in the configs
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    /// Only the exit code reports the outcome
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write its report (stdout by default)
    Check {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the bivariate region on a grid as CSV (stdout by default)
    Region {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every config in a directory, writing <name>.report.json files
    Sweep {
        dir: PathBuf,
        /// Report directory; defaults to the config directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn summary(name: &str, report: &Report) -> String {
    let mut line = format!("{name}: {}", serde_json::to_string(&report.status).unwrap_or_default().trim_matches('"'));
    if let Some(e) = &report.error {
        line.push_str(&format!(" ({e})"));
    }
    line
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<u8> {
    let opts = RunOptions { tol: cli.tol, seed_override: cli.seed_override };
    match &cli.command {
        Command::Check { config, out } => {
            let report = check_file(config, &opts);
            let json = report.to_json();
            match out {
                Some(path) => fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
            if !cli.quiet || report.error.is_some() {
                eprintln!("{}", summary(&config.display().to_string(), &report));
            }
            Ok(report.status.exit_code() as u8)
        }
        Command::Region { t, grid, out } => {
            let csv = match emit_region_plotdata(*t, *grid) {
                Ok(csv) => csv,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(2);
                }
            };
            match out {
                Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::Sweep { dir, out_dir } => {
            let out_dir = out_dir.clone().unwrap_or_else(|| dir.clone());
            let items = sweep(dir, &out_dir, &opts, thread_count()).with_context(|| format!("sweeping {}", dir.display()))?;
            let mut code = 0;
            for item in &items {
                if !cli.quiet || item.report.error.is_some() {
                    eprintln!("{}", summary(&item.config.display().to_string(), &item.report));
                }
                code = code.max(item.report.status.exit_code());
            }
            Ok(code as u8)
        }
    }
}
